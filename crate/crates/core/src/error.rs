use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A request needs finer grid resolution than the path carries.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Two compared minima were exactly equal.
    #[error("degenerate path: {0}")]
    Degenerate(String),

    #[error("numeric error: {message} (achieved defect {achieved:e})")]
    Numeric { message: String, achieved: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// An invariant that the algorithms guarantee was observed broken.
    #[error("internal consistency violation: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code used by the experiment runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) | Error::Numeric { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
