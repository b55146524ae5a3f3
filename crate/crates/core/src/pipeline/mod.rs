//! Demonstration lifecycle: record, trim, plot, normalise, chunk, and index.

pub mod archive;
mod chunk;
mod episode;
pub mod manifest;
mod norm;
mod plot;
mod trim;

pub use archive::{
    decode_episode, encode_episode, read_episode, record, write_episode, ArchiveError, Recorder,
};
pub use chunk::{make_chunks, ChunkSample, DEFAULT_CHUNK};
pub use episode::{Action, Episode, EpisodeError, EpisodeMeta};
pub use manifest::{export_manifest, Manifest, ManifestEntry, ManifestError, TrainingDefaults};
pub use norm::{compute_norm_stats, Moments, NormError, NormStats, STD_FLOOR};
pub use plot::{emit_trim_plot, PlotFiles};
pub use trim::{
    detect_motion_onset, displacements, trim_episode, TrimConfig, TrimError, TrimOutcome,
};
