use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The relation matrix is singular, so the quotient is not finite.
    #[error("quotient is infinite: relation matrix is singular")]
    InfiniteQuotient,

    #[error("action does not preserve the relation lattice")]
    IllFormedAction,

    #[error("g(A) is not invertible: det g(A) = {det}")]
    NotInvertible { det: BigInt },

    #[error("matrix is not hyperbolic: {0}")]
    NotHyperbolic(String),

    #[error("resource cap exceeded: {what} (limit {limit})")]
    ResourceCap { what: String, limit: String },

    #[error("integer bit-length {bits} exceeds the configured maximum {max}")]
    BitLimit { bits: u64, max: u64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Raised when an exact re-verification fails; always a bug or corrupt input.
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn cap(what: impl Into<String>, limit: impl ToString) -> Self {
        Error::ResourceCap {
            what: what.into(),
            limit: limit.to_string(),
        }
    }
}
