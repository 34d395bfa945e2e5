use thiserror::Error;

use crate::estimation::FringeFit;

/// Errors raised across the simulation, estimation and certification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} exceeds the supported maximum of {max}", max = crate::linalg::MAX_DIM)]
    DimensionOverflow(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("scan is flat: counts carry no fringe")]
    FlatData,

    #[error("fringe fit did not converge after {iterations} iterations")]
    FitFailure {
        iterations: usize,
        best: Box<FringeFit>,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
