use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("malformed grid file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("entropy undefined: no available cells")]
    EmptyDistribution,

    #[error("insufficient overlap: {overlap} cells (need {required})")]
    InsufficientOverlap { overlap: usize, required: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
