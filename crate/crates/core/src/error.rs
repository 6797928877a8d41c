use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of an [`Error`], used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input, schema or validation failure.
    Validation,
    /// A numeric computation could not produce a finite result.
    Numeric,
    /// Filesystem or stream failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectrum has zero total counts")]
    EmptySpectrum,
    #[error("spectrum has {found} counts, at least {required} required")]
    InsufficientCounts { found: u64, required: u64 },
    #[error("total counts overflow a 64-bit integer")]
    CountOverflow,
    #[error("invalid energy grid: {0}")]
    InvalidGrid(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("kernel density is not finite")]
    NonFiniteDensity,
    #[error("energy grids differ")]
    GridMismatch,
    #[error("class library has no entries")]
    EmptyLibrary,
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Grid { path: PathBuf, line: u64, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Value { path: PathBuf, line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported format_version {found}, expected {expected}")]
    Version { found: u64, expected: u64 },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonFiniteDensity | Error::CountOverflow => ErrorClass::Numeric,
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
