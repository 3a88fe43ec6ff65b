//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across IO, construction and matching.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying IO failure (missing file, truncated payload, ...).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file content (bad magic, header, or sample encoding).
    #[error("format error: {0}")]
    Format(String),

    /// Invalid argument or inconsistent inputs (dimension mismatch, bad range, ...).
    #[error("argument error: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
