use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("element is not a unit: {0}")]
    NonUnit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("selection rule violated: j + a + b = {actual}, expected {expected} (use force to override)")]
    SelectionRule { actual: i64, expected: i64 },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("ambiguous contour: {0}")]
    AmbiguousContour(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("parse error: {0}")]
    Parse(String),
}
