//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Ingest {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate rating for (user {user}, item {item})")]
    DuplicateRating {
        path: String,
        line: usize,
        user: String,
        item: String,
    },

    #[error("rating value {value} outside [1.0, 5.0]")]
    ValueOutOfRange { value: f64 },

    #[error("unknown user {0}")]
    UnknownUser(String),

    #[error("unknown item {0}")]
    UnknownItem(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("MF training diverged (non-finite parameter) during pass {pass}")]
    Divergence { pass: usize },

    #[error("length mismatch: {left} predictions vs {right} truths")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("experiment step {step:?} produced an empty {what} set")]
    EmptyAfterStep { step: String, what: String },

    #[error("results were not evaluated on the same test pair sequence ({left} vs {right})")]
    TestSetMismatch { left: String, right: String },

    #[error("model file format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("spec parse error: {0}")]
    SpecParse(#[from] toml::de::Error),
}
