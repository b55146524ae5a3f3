//! `.wbep` episode archives. The byte layout is described in `docs/episode-format.md`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::{Action, Episode, EpisodeError, EpisodeMeta};
use crate::config::CameraId;
use crate::kinematics::{JointState, Pose, ACTION_DIM};
use crate::simulator::ObservationBundle;

pub const MAGIC: [u8; 4] = *b"WBEP";
pub const FORMAT_VERSION: u32 = 1;
pub const EXTENSION: &str = "wbep";
/// Magic, version and header length.
pub const PREAMBLE_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not an episode archive")]
    BadMagic,
    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u32),
    #[error("archive header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("corrupt archive: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Invalid(#[from] EpisodeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    U64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub name: String,
    pub dtype: Dtype,
    pub shape: [usize; 2],
    /// Byte offset from the start of the data section.
    pub offset: u64,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTable {
    pub camera: String,
    pub codec: String,
    /// Per step, byte offset from the start of the data section.
    pub offsets: Vec<u64>,
    pub lens: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub format: String,
    pub version: u32,
    pub meta: EpisodeMeta,
    pub steps: usize,
    pub series: Vec<SeriesEntry>,
    pub frames: Vec<FrameTable>,
    pub data_len: u64,
}

const SERIES: [(&str, Dtype, usize); 5] = [
    ("joints", Dtype::F64, JointState::LEN),
    ("ee_left", Dtype::F64, 7),
    ("ee_right", Dtype::F64, 7),
    ("actions", Dtype::F64, ACTION_DIM),
    ("timestamps_ns", Dtype::U64, 1),
];

fn pose_values(p: &Pose) -> [f64; 7] {
    let [x, y, z] = p.position;
    let [w, qx, qy, qz] = p.orientation;
    [x, y, z, w, qx, qy, qz]
}

fn pose_from(v: &[f64]) -> Pose {
    Pose::new([v[0], v[1], v[2]], [v[3], v[4], v[5], v[6]])
}

fn put_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialises a validated episode to archive bytes.
pub fn encode_episode(ep: &Episode) -> Result<Vec<u8>, ArchiveError> {
    ep.validate()?;
    let t = ep.len();
    let mut data = Vec::new();
    let mut series = Vec::new();
    for (name, dtype, width) in SERIES {
        let offset = data.len() as u64;
        match name {
            "joints" => put_f64s(&mut data, ep.joints.iter().flat_map(|j| j.to_array())),
            "ee_left" => put_f64s(&mut data, ep.ee_left.iter().flat_map(pose_values)),
            "ee_right" => put_f64s(&mut data, ep.ee_right.iter().flat_map(pose_values)),
            "actions" => put_f64s(&mut data, ep.actions.iter().flatten().copied()),
            _ => {
                for ts in &ep.timestamps_ns {
                    data.extend_from_slice(&ts.to_le_bytes());
                }
            }
        }
        let len = data.len() as u64 - offset;
        series.push(SeriesEntry {
            name: name.into(),
            dtype,
            shape: [t, width],
            offset,
            len,
        });
    }
    let mut frames = Vec::new();
    for (cam, payloads) in CameraId::ALL.iter().zip(&ep.frames) {
        let mut table = FrameTable {
            camera: cam.name().into(),
            codec: "jfif".into(),
            offsets: vec![],
            lens: vec![],
        };
        for p in payloads {
            table.offsets.push(data.len() as u64);
            table.lens.push(p.len() as u64);
            data.extend_from_slice(p);
        }
        frames.push(table);
    }
    let header = ArchiveHeader {
        format: "wbep".into(),
        version: FORMAT_VERSION,
        meta: ep.meta.clone(),
        steps: t,
        series,
        frames,
        data_len: data.len() as u64,
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(PREAMBLE_LEN + header_bytes.len() + data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    out.extend_from_slice(&data);
    Ok(out)
}

fn corrupt(msg: impl Into<String>) -> ArchiveError {
    ArchiveError::Corrupt(msg.into())
}

/// Reads only the preamble and JSON header.
pub fn decode_header(bytes: &[u8]) -> Result<(ArchiveHeader, usize), ArchiveError> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(ArchiveError::BadMagic);
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(corrupt("truncated preamble"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ArchiveError::UnsupportedVersion(version));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let data_start = usize::try_from(header_len)
        .ok()
        .and_then(|h| h.checked_add(PREAMBLE_LEN))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| corrupt("header extends past end of file"))?;
    let header: ArchiveHeader = serde_json::from_slice(&bytes[PREAMBLE_LEN..data_start])?;
    if header.format != "wbep" || header.version != version {
        return Err(corrupt("header format/version disagree with preamble"));
    }
    Ok((header, data_start))
}

fn block(data: &[u8], offset: u64, len: u64) -> Result<&[u8], ArchiveError> {
    let start = usize::try_from(offset).map_err(|_| corrupt("offset overflow"))?;
    let len = usize::try_from(len).map_err(|_| corrupt("length overflow"))?;
    start
        .checked_add(len)
        .and_then(|end| data.get(start..end))
        .ok_or_else(|| corrupt(format!("block {offset}+{len} outside data section")))
}

fn f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn decode_episode(bytes: &[u8]) -> Result<Episode, ArchiveError> {
    let (header, data_start) = decode_header(bytes)?;
    let data = &bytes[data_start..];
    if data.len() as u64 != header.data_len {
        return Err(corrupt(format!(
            "data section is {} bytes, header says {}",
            data.len(),
            header.data_len
        )));
    }
    let t = header.steps;
    if header.series.len() != SERIES.len() {
        return Err(corrupt("unexpected series list"));
    }
    let mut ep = Episode::empty(header.meta.clone());
    for (entry, (name, dtype, width)) in header.series.iter().zip(SERIES) {
        if entry.name != name || entry.dtype != dtype || entry.shape != [t, width] {
            return Err(corrupt(format!(
                "series {} does not match layout",
                entry.name
            )));
        }
        let expected = t
            .checked_mul(width * 8)
            .ok_or_else(|| corrupt("series too large"))?;
        if entry.len != expected as u64 {
            return Err(corrupt(format!(
                "series {name} has {} bytes, expected {expected}",
                entry.len
            )));
        }
        let raw = block(data, entry.offset, entry.len)?;
        match name {
            "joints" => {
                ep.joints = f64s(raw)
                    .chunks_exact(width)
                    .map(|c| JointState::from_array(c.try_into().unwrap()))
                    .collect()
            }
            "ee_left" => ep.ee_left = f64s(raw).chunks_exact(7).map(pose_from).collect(),
            "ee_right" => ep.ee_right = f64s(raw).chunks_exact(7).map(pose_from).collect(),
            "actions" => {
                ep.actions = f64s(raw)
                    .chunks_exact(ACTION_DIM)
                    .map(|c| <Action>::try_from(c).unwrap())
                    .collect()
            }
            _ => {
                ep.timestamps_ns = raw
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
        }
    }
    if header.frames.len() != 3 {
        return Err(corrupt("expected three frame tables"));
    }
    for ((slot, table), cam) in ep.frames.iter_mut().zip(&header.frames).zip(CameraId::ALL) {
        if table.camera != cam.name() || table.offsets.len() != table.lens.len() {
            return Err(corrupt(format!("bad frame table for {}", table.camera)));
        }
        for (&off, &len) in table.offsets.iter().zip(&table.lens) {
            slot.push(block(data, off, len)?.to_vec());
        }
    }
    ep.validate()?;
    Ok(ep)
}

/// Writes atomically: the archive appears complete at `path` or not at all.
pub fn write_episode(path: impl AsRef<Path>, ep: &Episode) -> Result<(), ArchiveError> {
    let bytes = encode_episode(ep)?;
    write_atomic(path.as_ref(), &bytes)?;
    Ok(())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    builder.prefix(".partial-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn read_episode(path: impl AsRef<Path>) -> Result<Episode, ArchiveError> {
    decode_episode(&fs::read(path)?)
}

/// Accumulates simulator observations and commanded actions into an episode.
pub struct Recorder {
    episode: Episode,
    with_frames: bool,
}

impl Recorder {
    pub fn new(meta: EpisodeMeta, with_frames: bool) -> Recorder {
        Recorder {
            episode: Episode::empty(meta),
            with_frames,
        }
    }

    /// Records `obs` and the action commanded from it. Steps must be `dt_ns` apart.
    pub fn push(&mut self, obs: &ObservationBundle, action: Action) -> Result<(), EpisodeError> {
        if self.episode.meta.dt_ns == 0 {
            return Err(EpisodeError::BadTimestep);
        }
        if let Some(&last) = self.episode.timestamps_ns.last() {
            let expected = last + self.episode.meta.dt_ns;
            if obs.timestamp_ns != expected {
                return Err(EpisodeError::IrregularTimestep {
                    step: self.episode.len(),
                    expected,
                    actual: obs.timestamp_ns,
                });
            }
        }
        self.episode.push_observation(obs, action, self.with_frames);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.episode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episode.is_empty()
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    /// Writes the archive. An empty recording is rejected before any file is created.
    pub fn finish(self, path: impl AsRef<Path>) -> Result<Episode, ArchiveError> {
        if self.episode.is_empty() {
            return Err(EpisodeError::Empty.into());
        }
        write_episode(path, &self.episode)?;
        Ok(self.episode)
    }
}

/// Records a whole stream of `(observation, action)` steps to `path`.
pub fn record(
    steps: impl IntoIterator<Item = (ObservationBundle, Action)>,
    meta: EpisodeMeta,
    path: impl AsRef<Path>,
) -> Result<Episode, ArchiveError> {
    let mut rec = Recorder::new(meta, true);
    for (obs, action) in steps {
        rec.push(&obs, action)?;
    }
    rec.finish(path)
}
