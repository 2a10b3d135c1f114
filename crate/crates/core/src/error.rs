use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape k={k}, n={n}: {reason}")]
    InvalidShape { k: usize, n: usize, reason: String },

    #[error("digit {digit} at coordinate {coord} is outside 1..={k}")]
    DigitOutOfRange { coord: usize, digit: usize, k: usize },

    #[error("expected {expected} coordinates, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for a cube of {size} points")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("work budget exceeded: {needed} candidates requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),

    #[error("set is not {i}{j}-insensitive")]
    NotInsensitive { i: u8, j: u8 },

    #[error("set contains the combinatorial line {0}")]
    ContainsLine(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown verification entry `{0}`")]
    UnknownEntry(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
