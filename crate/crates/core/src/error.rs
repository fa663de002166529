use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs live on different ambient sets.
    #[error("ambient mismatch: {0}")]
    Mismatch(String),

    /// The requested enumeration exceeds the configured work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// No feasible point exists, or a construction leaves the box [0,1].
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
