use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel is not ergodic: {0}")]
    NotErgodic(String),
    #[error("kernel violates detailed balance (max violation {max_violation:e})")]
    NotReversible { max_violation: f64 },
    #[error("qubit addressing error: {0}")]
    Addressing(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("circuit is not unitary: {0}")]
    NotUnitary(String),
    #[error("post-selection impossible: branch probability {probability:e}")]
    PostSelectImpossible { probability: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("qubit name collision: {0}")]
    NameCollision(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("encoded operator is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("construction invalid: {0}")]
    ConstructionInvalid(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("experiment {experiment}: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
