use thiserror::Error;

/// Errors raised by the simulator, compiler and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("singular schedule: {0}")]
    SingularSchedule(String),
    #[error("decomposition branch error: {0}")]
    Branch(String),
    #[error("no feasible schedule: {0}")]
    Infeasible(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
