use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("class index {index} out of range for {classes} classes")]
    Index { index: usize, classes: usize },

    #[error("non-finite value in {context}{}", .iterate.map(|i| format!(" at iterate {i}")).unwrap_or_default())]
    Numeric {
        context: &'static str,
        iterate: Option<usize>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("perturbation direction is degenerate (zero-norm attack output)")]
    DegenerateDirection,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed data at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
