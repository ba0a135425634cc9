use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the evostoch library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} {what}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("probabilities sum to {sum}, which is off by more than the renormalization threshold {threshold:e}")]
    ProbabilitySum { sum: f64, threshold: f64 },

    #[error("probability {value} at row {row} is negative or not finite")]
    BadProbability { row: usize, value: f64 },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("portfolio weights sum to {sum}, expected 1")]
    Budget { sum: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no valid individual after {attempts} initial population attempts")]
    NoValidIndividual { attempts: usize },

    #[error(
        "no valid tree for shape {shape:?} with {scenarios} input paths; try fewer nodes per stage"
    )]
    NoValidTree { shape: Vec<usize>, scenarios: usize },

    #[error("tree is malformed: {0}")]
    MalformedTree(String),

    #[error("{}: row {row}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    InvalidFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
