use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    /// A documented precondition was violated.
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    /// An iterative solver hit its iteration cap.
    #[error("no convergence: {0}")]
    Nonconvergence(String),
    /// The best arm is not unique.
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
}

pub type Result<T> = std::result::Result<T, DomainError>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::DomainError::OutOfDomain(format!($($arg)+)));
        }
    };
}

pub(crate) use ensure;
