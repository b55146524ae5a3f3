//! Dataset manifest: every archive in a directory with checksums, normalisation
//! statistics and the training hyperparameters the data is meant for.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::archive::{decode_episode, write_atomic, ArchiveError, EXTENSION};
use super::norm::{compute_norm_stats, NormStats};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const EXPECTED_DEMONSTRATIONS: usize = 100;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("no .wbep archives in {0}")]
    EmptyDataset(PathBuf),
    #[error("{path}: {source}")]
    Archive { path: String, source: ArchiveError },
    #[error("{path}: checksum mismatch (manifest {expected}, file {actual})")]
    ChecksumMismatch {
        path: String,
        expected: String,
        actual: String,
    },
    #[error("{path}: manifest says {expected} steps, archive has {actual}")]
    StepMismatch {
        path: String,
        expected: usize,
        actual: usize,
    },
    #[error("manifest: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported manifest schema {0}")]
    Schema(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingDefaults {
    pub optimizer: String,
    pub lr: f64,
    pub chunk: usize,
    pub hidden: usize,
    pub ffw: usize,
    pub batch: usize,
    pub epochs: usize,
    pub kl_weight: f64,
}

impl Default for TrainingDefaults {
    fn default() -> Self {
        TrainingDefaults {
            optimizer: "adam".into(),
            lr: 1e-5,
            chunk: 30,
            hidden: 512,
            ffw: 3200,
            batch: 4,
            epochs: 8000,
            kl_weight: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the dataset directory, `/`-separated.
    pub path: String,
    pub steps: usize,
    pub sha256: String,
    pub task: String,
    pub frame_counts: [usize; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    /// Intended dataset size; compare with `episodes.len()`.
    pub expected_demonstrations: usize,
    pub episodes: Vec<ManifestEntry>,
    pub norm_stats: NormStats,
    pub training: TrainingDefaults,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `.wbep` files directly inside `dir`, sorted by name.
pub fn list_archives(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == EXTENSION) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

pub fn export_manifest(
    dir: impl AsRef<Path>,
    training: TrainingDefaults,
) -> Result<Manifest, ManifestError> {
    let dir = dir.as_ref();
    let paths = list_archives(dir)?;
    if paths.is_empty() {
        return Err(ManifestError::EmptyDataset(dir.to_path_buf()));
    }
    let mut entries = Vec::new();
    let mut episodes = Vec::new();
    for path in &paths {
        let rel = relative(dir, path);
        let bytes = fs::read(path)?;
        let ep = decode_episode(&bytes).map_err(|source| ManifestError::Archive {
            path: rel.clone(),
            source,
        })?;
        entries.push(ManifestEntry {
            path: rel,
            steps: ep.len(),
            sha256: sha256_hex(&bytes),
            task: ep.meta.task.clone(),
            frame_counts: ep.meta.frame_counts,
        });
        episodes.push(ep);
    }
    let norm_stats = compute_norm_stats(&episodes).expect("archives hold at least one step");
    Ok(Manifest {
        schema_version: MANIFEST_SCHEMA,
        expected_demonstrations: EXPECTED_DEMONSTRATIONS,
        episodes: entries,
        norm_stats,
        training,
    })
}

impl Manifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ManifestError> {
        let mut text = serde_json::to_vec_pretty(self)?;
        text.push(b'\n');
        write_atomic(path.as_ref(), &text)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Manifest, ManifestError> {
        let m: Manifest = serde_json::from_slice(&fs::read(path)?)?;
        if m.schema_version != MANIFEST_SCHEMA {
            return Err(ManifestError::Schema(m.schema_version));
        }
        Ok(m)
    }

    /// Re-hashes and re-reads every listed archive under `dir`.
    pub fn validate(&self, dir: impl AsRef<Path>) -> Result<(), ManifestError> {
        let dir = dir.as_ref();
        for entry in &self.episodes {
            let bytes = fs::read(dir.join(&entry.path))?;
            let actual = sha256_hex(&bytes);
            if actual != entry.sha256 {
                return Err(ManifestError::ChecksumMismatch {
                    path: entry.path.clone(),
                    expected: entry.sha256.clone(),
                    actual,
                });
            }
            let ep = decode_episode(&bytes).map_err(|source| ManifestError::Archive {
                path: entry.path.clone(),
                source,
            })?;
            if ep.len() != entry.steps {
                return Err(ManifestError::StepMismatch {
                    path: entry.path.clone(),
                    expected: entry.steps,
                    actual: ep.len(),
                });
            }
        }
        Ok(())
    }
}
