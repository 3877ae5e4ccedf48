//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps `Config` to exit code 2 and `Ingestion` to exit code 3;
/// everything else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (bad rank, dimension mismatch, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data is unusable (NaN, negative power, ...).
    #[error("invalid data: {0}")]
    Data(String),

    /// An index addressed something outside the available range.
    #[error("out of range: {0}")]
    Bounds(String),

    /// The operation needs more accumulated state than is available.
    #[error("invalid state: {0}")]
    State(String),

    /// A configuration file or CLI parameter set failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// An input file could not be decoded.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for config errors, 3 for ingestion
    /// errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Ingestion(_) => 3,
            _ => 1,
        }
    }
}
