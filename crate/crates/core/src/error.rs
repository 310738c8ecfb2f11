use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The pump parameter is at or above the oscillation threshold.
    #[error("pump parameter x = {0} is at or above threshold (must be < 1)")]
    AboveThreshold(f64),

    #[error("frequency grids do not match: {0}")]
    GridMismatch(String),

    #[error("requested frequency {requested} Hz lies outside [{lo}, {hi}] Hz")]
    OutOfRange { requested: f64, lo: f64, hi: f64 },

    #[error("no valid points remain: {0}")]
    Empty(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The normal matrix is singular; `direction` names the parameter
    /// combination that the data does not constrain.
    #[error("degenerate fit (condition number {condition:.3e}): {direction} is not constrained by the data")]
    Degenerate { direction: String, condition: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
