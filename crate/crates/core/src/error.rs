use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    InvalidAlphabet(u64),

    #[error("dimension must be positive")]
    InvalidDimension,

    #[error("invalid prefix: {0}")]
    InvalidPrefix(String),

    #[error("invalid string: {0}")]
    InvalidString(String),

    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },

    #[error("per-call trial cap of {cap} reached; target marginal may be zero")]
    TrialCapReached { cap: u64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("domain of {0} strings is too large to enumerate")]
    DomainTooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("expected query count is infinite: marginal of coordinate {coordinate} is zero")]
    InfiniteExpectation { coordinate: usize },

    #[error("evaluator failure: {0}")]
    EvaluatorFailure(String),

    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_budget_exhausted(&self) -> bool {
        matches!(self, Error::BudgetExhausted { .. })
    }
}
