use thiserror::Error;

use crate::conic::SolveStatus;
use crate::instances::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what}: n = {n} exceeds the supported maximum of {limit}")]
    Capacity { what: &'static str, n: usize, limit: usize },

    #[error("solver finished with status {status:?}: {detail}")]
    NotConverged { status: SolveStatus, detail: String },

    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
