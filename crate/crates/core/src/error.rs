use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid modulus {0}: must be a prime in [2, {max}]", max = crate::field::MAX_MODULUS)]
    InvalidModulus(u64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("field mismatch: GF({left}) vs GF({right})")]
    FieldMismatch { left: u64, right: u64 },
    #[error("matrix is singular")]
    Singular,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("decode failure for user {user}: {reason}")]
    DecodeFailure { user: usize, reason: String },
    #[error("search space of {size} exceeds the limit {limit}")]
    Capacity { size: u128, limit: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
