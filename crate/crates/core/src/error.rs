use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two objects live in different boxes, or a code has the wrong length.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition of a checked lemma does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The quantity is undefined for this input (e.g. homogeneity of the empty family).
    #[error("undefined: {0}")]
    Undefined(String),
    /// The request exceeds a size, node or time budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// Malformed input data.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::Error::$kind(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure;
