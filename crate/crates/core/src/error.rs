use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {what} (max {max})")]
    Index {
        what: &'static str,
        index: usize,
        max: usize,
    },

    /// The Legendre expansion was cut off before the requested functions converged.
    #[error("matrix order {order} too small for the requested functions; need at least {required}")]
    TruncationTooSmall { order: usize, required: usize },

    /// Division by a numerically vanishing eigenvalue produced non-finite output.
    #[error("rank {n} is numerically poisoned: non-finite values after division by the eigenvalue")]
    PoisonedRank { n: usize },

    #[error("no trusted rank: epsilon_0 = {eps0:e} exceeds the cap {cap:e}")]
    NoTrustedRank { eps0: f64, cap: f64 },

    #[error("relative error undefined: reference field has zero norm")]
    UndefinedReference,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
