use thiserror::Error;

use crate::matrix::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. Indices in messages are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("document declares n = {declared} but the matrix has {actual} rows")]
    DimensionMismatch { declared: usize, actual: usize },

    #[error("invalid probability matrix: {0}")]
    InvalidMatrix(ValidationReport),

    #[error("ordering has {got} entries, expected {expected}")]
    OrderingLength { got: usize, expected: usize },

    #[error("ordering is not a permutation of 1..={n}: {detail}")]
    NotPermutation { n: usize, detail: String },

    #[error("could not parse ordering {0:?}")]
    OrderingSyntax(String),

    #[error("level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("need at least {min} events, got {n}")]
    TooFewEvents { n: usize, min: usize },

    #[error("delta {delta} outside [{low}, {high}] for pair ({i}, {j})")]
    DeltaOutOfRange {
        delta: f64,
        low: f64,
        high: f64,
        i: usize,
        j: usize,
    },

    #[error("first-order probability {value} of event {index} is outside [0, 1]")]
    FirstOrderOutOfRange { index: usize, value: f64 },

    #[error("exhaustive search over {n}! orderings exceeds the cap n <= {cap}; use greedy_ordering instead or raise the cap")]
    SearchCapExceeded { n: usize, cap: usize },

    #[error("input sequence is empty")]
    EmptyInput,

    #[error("trial count must be at least 1")]
    NoTrials,

    #[error("invalid atom system: {0}")]
    InvalidSystem(String),

    #[error("union probability {direct} disagrees with inclusion-exclusion {inclusion_exclusion}")]
    OracleMismatch { direct: f64, inclusion_exclusion: f64 },

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
