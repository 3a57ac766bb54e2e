use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A document did not match its schema. `path` is the JSON path of the offending value.
    #[error("{source_name}: schema error at `{path}`: {message}")]
    Schema {
        source_name: String,
        path: String,
        message: String,
    },

    /// A line-oriented file contained a malformed record.
    #[error("{source_name}: {message} at line {line}")]
    Line {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("unparseable timestamp {0:?} (expected \"YYYY-MM-DD HH:MM:SS\")")]
    Timestamp(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
