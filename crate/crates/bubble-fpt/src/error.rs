use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Only the downward first passage time admits a Laplace transform;
    /// upward queries are rejected rather than silently answered.
    #[error("unsupported direction: {0}")]
    UnsupportedDirection(String),

    /// The stationary law does not exist for c = 0 (the normalizer diverges).
    #[error("no stationary law: {0}")]
    NoStationaryLaw(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
