//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    // configuration spaces
    #[error("duplicate or missing option name: {0}")]
    DuplicateOrMissingName(String),
    #[error("unknown option: {0}")]
    UnknownOption(String),
    #[error("inadmissible value {value} for option {option}")]
    InadmissibleValue { option: String, value: String },
    #[error("invalid option {0}: {1}")]
    InvalidOption(String, String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("cardinality {cardinality} exceeds enumeration limit {limit}")]
    CardinalityOverLimit { cardinality: u128, limit: u128 },
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    // gateway
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("no mock script entry matches role {role} at iteration {iteration}")]
    NoScriptEntry { role: String, iteration: u32 },
    #[error("transport error after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("non-retryable HTTP status {status}: {message}")]
    NonRetryableStatus { status: u16, message: String },
    #[error("empty completion text")]
    EmptyCompletion,
    #[error("no JSON value found in response text")]
    NoJsonFound,
    #[error("schema mismatch: missing keys {missing:?}, mistyped keys {mistyped:?}")]
    SchemaMismatch {
        missing: Vec<String>,
        mistyped: Vec<String>,
    },

    // pipeline
    #[error("measurement history is empty")]
    EmptyHistory,
    #[error("all configuration generators failed")]
    GenerationExhausted,
    #[error("budget {budget} exceeds space cardinality {cardinality}")]
    BudgetTooLarge { budget: usize, cardinality: u128 },
    #[error("oracle failure: {0}")]
    Oracle(String),

    // numerics / models
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel matrix factorization failed after maximum jitter")]
    Factorization,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input: {0}")]
    EmptyInput(String),

    // harness
    #[error("incomplete dataset: {0}")]
    IncompleteDataset(String),
    #[error("duplicate dataset row: {0}")]
    DuplicateRow(String),
    #[error("dataset header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
