use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes that do not fit together.
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A value outside the domain an operation accepts.
    #[error("validation error: {0}")]
    Validation(String),

    /// API misuse, e.g. a forward cache replayed against different parameters.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dataset layout error: {}: {reason}", path.display())]
    Layout { path: PathBuf, reason: String },

    #[error("cannot decode image {}: {reason}", path.display())]
    Ingestion { path: PathBuf, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint integrity error: {0}")]
    Integrity(String),

    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    Version { found: u16, expected: u16 },

    #[error("capacity error: {0}")]
    Capacity(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
