use thiserror::Error;

/// Errors raised across the crate.
///
/// `InvalidInput` covers violated preconditions, `Numerical` covers failed
/// convergence or a violated hypothesis detected numerically, and
/// `Indeterminate` is returned when a decision cannot be made at the
/// requested tolerance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }

    pub fn indeterminate(msg: impl Into<String>) -> Self {
        Error::Indeterminate(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 1,
            Error::Numerical(_) | Error::Hypothesis(_) => 2,
            Error::Indeterminate(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
