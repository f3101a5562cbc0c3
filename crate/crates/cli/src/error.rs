//! Error-to-exit-code contract: 0 success, 1 failed verification,
//! 2 validation failure, 3 numerical failure.

use thiserror::Error;
use willmore_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Numerical(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::UnknownManifold(_)
            | CoreError::UnknownFamily(_)
            | CoreError::ParamRange(_)
            | CoreError::Dimension(_)
            | CoreError::Resolution(_)
            | CoreError::Parse(_) => CliError::Validation(err.to_string()),
            _ => CliError::Numerical(err.to_string()),
        }
    }
}
