use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {0} reached a unit projection")]
    NonFinite(f64),

    #[error("dimension mismatch: index {index} out of range for length {len}")]
    DimensionMismatch { index: usize, len: usize },

    #[error("expected {expected} expert predictions, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("all combination weights are zero")]
    DegenerateWeights,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("label set {0:?} is not binary")]
    NotBinary(Vec<f64>),

    #[error("split of {total} instances at fraction {fraction} leaves an empty side")]
    EmptySplit { total: usize, fraction: f64 },

    #[error("malformed model file: {0}")]
    Model(String),

    #[error("oracle failed at round {round}: {msg}")]
    Oracle { round: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
