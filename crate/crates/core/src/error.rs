use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid share set: {0}")]
    InvalidShareSet(String),

    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("no eligible commodity server for subprotocol {protocol}")]
    CommodityExhausted { protocol: String },

    #[error("verification failed in {protocol}: protocol gave {found}, oracle gave {expected}")]
    VerificationFailed {
        protocol: String,
        expected: String,
        found: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
