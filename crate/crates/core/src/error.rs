use thiserror::Error;

/// Errors produced by the learner and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero vector has no regularity ratio")]
    ZeroVector,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate halfspace: all weights and bias are zero")]
    DegenerateHalfspace,

    #[error("dimension {dim} too large for exhaustive enumeration (limit {limit})")]
    TooLargeToEnumerate { dim: usize, limit: usize },

    #[error("ellipsoid collapsed numerically at iteration {iteration}")]
    NumericalCollapse { iteration: usize },

    #[error("input point norm {norm} exceeds bound {bound}")]
    NormViolation { norm: f64, bound: f64 },

    #[error("boundary-flip noise requires the planted halfspace")]
    MissingPlanted,

    #[error("unknown adversary `{0}`")]
    UnknownAdversary(String),

    #[error("sparse fit claimed feasible but misclassifies {0} samples")]
    Verification(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
