//! Crate-wide error type.

use thiserror::Error;

/// Largest integer accepted anywhere; inputs above this would risk silent
/// wraparound in intermediate products.
pub const MAX_INT: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A prime table does not reach far enough for the requested operation.
    #[error("prime table covers [2, {limit}] but {needed} is required")]
    TableTooSmall { limit: u64, needed: u64 },

    /// An integer input exceeds [`MAX_INT`].
    #[error("integer input {0} exceeds 2^62")]
    Overflow(u64),

    /// Evaluation outside the tabulated range of a solver table.
    #[error("argument {arg} outside tabulated range [0, {max}]")]
    OutOfRange { arg: f64, max: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Reject integers large enough to overflow intermediate arithmetic.
pub(crate) fn check_int(n: u64) -> Result<u64> {
    if n > MAX_INT {
        Err(Error::Overflow(n))
    } else {
        Ok(n)
    }
}
