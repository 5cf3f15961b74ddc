use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum TmError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("structural mismatch: expected {expected} {what}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A feedback lookup hit a combination that a correct clause evaluator
    /// can never produce.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("snapshot: unsupported format version {found} (expected {expected})")]
    SnapshotVersion { found: u16, expected: u16 },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TmError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        TmError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TmError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = TmError> = std::result::Result<T, E>;
