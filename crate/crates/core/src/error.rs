use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the laboratory. Variants name the contract that failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("kernel at t = {t} is unresolvable: sqrt(t) = {scale} < 2h = {min}")]
    Unresolvable { t: f64, scale: f64, min: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("inadmissible indices: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("decay fit needs at least {needed} shells, found {found}")]
    InsufficientShells { found: usize, needed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Picard iteration failed to contract at t = {t}: residual ratio {ratio:.3} >= 1")]
    NonContraction { t: f64, ratio: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
