use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The sample is not consistent with any hypothesis under the loss the
    /// learner requires.
    #[error("realizability violation: {0}")]
    RealizabilityViolation(String),

    #[error("instance too large for exhaustive search: {0} (set the override flag to proceed)")]
    SizeGuard(String),

    /// Boosting hit its round cap without a zero-loss majority vote.
    /// `margins` holds, per working point, (correct votes - wrong votes) / rounds.
    #[error("boosting failed after {rounds} rounds; worst margin {worst_margin:.4}")]
    BoostingFailure {
        rounds: usize,
        worst_margin: f64,
        margins: Vec<f64>,
    },

    #[error("weak learner budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("structural check failed: {0}")]
    StructuralCheck(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
