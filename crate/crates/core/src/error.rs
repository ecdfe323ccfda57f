use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} bits, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("unsupported target for this oracle: {0}")]
    UnsupportedTarget(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("empty bias sequence")]
    EmptySequence,

    #[error("conflicting restriction: variable {0} appears more than once")]
    ConflictingRestriction(usize),

    #[error("impurity '{0}' has no finite smoothness bound")]
    InfiniteSmoothness(String),

    #[error("set family too large for exhaustive distance check: k = {0}")]
    TooLargeK(usize),

    #[error("no set family with distance >= {d} found within {trials} trials")]
    NotFound { d: usize, trials: u64 },

    #[error("no feasible free-set size for epsilon = {epsilon} at k = {k}")]
    InfeasibleEpsilon { epsilon: f64, k: usize },

    #[error("unknown impurity '{0}' (expected gini, entropy, or km)")]
    UnknownImpurity(String),

    #[error("invalid config: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than by a
    /// failed claim or an internal fault; the CLI maps these to exit code 2.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::ArityMismatch { .. }
                | Error::InvalidSpec(_)
                | Error::EmptySequence
                | Error::ConflictingRestriction(_)
                | Error::InfiniteSmoothness(_)
                | Error::TooLargeK(_)
                | Error::InfeasibleEpsilon { .. }
                | Error::UnknownImpurity(_)
                | Error::InvalidConfig { .. }
                | Error::UnsupportedTarget(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
