//! Process exit codes.

use timdp_core::Error;

pub const OK: u8 = 0;
/// I/O or any other failure.
pub const FAILURE: u8 = 1;
/// Bad command-line arguments or argument values.
pub const USAGE: u8 = 2;
/// The model file does not parse or fails validation.
pub const INVALID_MODEL: u8 = 3;
/// A solver hit its iteration cap; outputs are still written.
pub const NOT_CONVERGED: u8 = 4;
/// The requested solver or backend does not apply to this model.
pub const UNSUPPORTED: u8 = 5;
/// A size guard (action cap, enumeration limit) was hit.
pub const GUARD: u8 = 6;

/// Errors the CLI adds on top of the library's.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read model {path}")]
    Model {
        path: String,
        #[source]
        source: Error,
    },
    #[error("{0} did not converge within the iteration cap")]
    NotConverged(String),
    #[error("{0}")]
    Usage(String),
}

/// Exit code for an error chain.
pub fn code_for(err: &anyhow::Error) -> u8 {
    if let Some(cli) = err.downcast_ref::<CliError>() {
        return match cli {
            CliError::Model {
                source: Error::Io(_),
                ..
            } => FAILURE,
            CliError::Model { .. } => INVALID_MODEL,
            CliError::NotConverged(_) => NOT_CONVERGED,
            CliError::Usage(_) => USAGE,
        };
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidModel(_)) => INVALID_MODEL,
        Some(Error::InputDomain(_)) => USAGE,
        Some(Error::Unsupported(_)) => UNSUPPORTED,
        Some(Error::ActionSpaceTooLarge { .. } | Error::Guard(_) | Error::Overflow(_)) => GUARD,
        _ => FAILURE,
    }
}
