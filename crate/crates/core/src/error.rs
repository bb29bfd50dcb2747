use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// The approximation error of an irrational input could flip a comparison.
    #[error("precision guard violated in shell {shell}: {detail}")]
    PrecisionGuard { shell: u64, detail: String },

    /// The search region or time budget was exhausted before a decision.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// A theorem instance produced no witness. Never expected.
    #[error("falsified: {0}")]
    Falsified(String),

    #[error("function not invertible: {0}")]
    NotInvertible(String),

    #[error("outside domain: {0}")]
    Domain(String),
}
