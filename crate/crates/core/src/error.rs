//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the simulator, preprocessing, training, and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A value or shape that violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector/matrix dimensions that do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Geometry that leaves an angle or Jacobian undefined.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Top-k proportion requested on an all-zero energy vector.
    #[error("undefined proportion: total energy is zero")]
    UndefinedProportion,

    /// Configuration file problems (unknown keys, unparsable values, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Dataset/checkpoint contents that fail validation.
    #[error("data error: {0}")]
    Data(String),

    /// A NaN or infinity where the pipeline requires finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numeric, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
            _ => 1,
        }
    }
}
