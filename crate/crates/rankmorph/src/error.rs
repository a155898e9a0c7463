use thiserror::Error;

/// Errors produced by the rankmorph library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} channels, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite score produced by the reduced mapping for color {0:?}")]
    NonFiniteScore(Vec<f64>),

    #[error("color {0:?} not present in the look-up table")]
    ColorNotInLut(Vec<f64>),

    #[error("rank {rank} out of range for a look-up table with {len} entries")]
    RankNotInLut { rank: u32, len: usize },

    #[error("pixel ({x}, {y}) has no in-domain sample under the structuring element")]
    EmptyWindow { x: usize, y: usize },

    #[error("matrix is not a total order: {0}")]
    InvalidOrder(String),

    #[error("{n} candidates exceeds the exact-solver cap of {cap}; use the soft solver")]
    CandidateCap { n: usize, cap: usize },

    #[error("data format error in {path}: {message} (byte offset {offset})")]
    Format {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad arguments, configuration, or domain preconditions.
    Config,
    /// Malformed input data or files.
    Format,
    /// Non-finite or otherwise failed numeric computation.
    Numeric,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Format { .. } | Error::Io(_) => ErrorCategory::Format,
            Error::Numeric(_) | Error::NonFiniteScore(_) => ErrorCategory::Numeric,
            _ => ErrorCategory::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
