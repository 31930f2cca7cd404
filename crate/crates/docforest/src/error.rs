//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: `Parse` and `Validation` are
/// data failures (exit 2), `Config` is a usage failure (exit 1), and
/// `Internal` signals a broken invariant inside the library itself (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    /// A record could not be decoded at all (bad JSON, wrong field type).
    #[error("parse error: {0}")]
    Parse(String),

    /// Decoded data violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller-supplied option or configuration value is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// An internal invariant failed; this is a bug, not a data problem.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 1,
            Error::Parse(_) | Error::Validation(_) => 2,
            Error::Internal(_) => 3,
        }
    }
}
