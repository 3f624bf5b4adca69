//! Crate-wide error type.

use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input data violates a precondition: empty where content is required,
    /// non-finite values, mismatched row widths, and the like.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A text input failed to parse. `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// An underlying I/O failure, annotated with the path involved.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A stored model could not be used: unsupported version or contents
    /// that fail the invariants checked on load.
    #[error("model file {}: {message}", path.display())]
    Model { path: PathBuf, message: String },
}

impl Error {
    pub fn parameter(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        Error::InvalidData(message.into())
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn model(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Error::Model {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
