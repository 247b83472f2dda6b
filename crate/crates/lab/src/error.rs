use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] qelab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config hash mismatch: manifest has {expected}, config echo hashes to {found}")]
    HashMismatch { expected: String, found: String },
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
