use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by model construction, solvers and clustering search.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input out of domain: {0}")]
    InputDomain(String),

    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("action space too large: {actions} joint controls exceeds cap {cap}")]
    ActionSpaceTooLarge { actions: u128, cap: u64 },

    #[error("size guard violated: {0}")]
    Guard(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InputDomain(msg.into()))
}
