use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] sepqma_core::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("output error: {0}")]
    Output(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 2 parse, 3 capacity, 4 party mismatch, 5 Stage-2 table cap, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use sepqma_core::Error as E;
        match self {
            CliError::Parse(_) => 2,
            CliError::Core(E::Capacity { .. }) => 3,
            CliError::Core(E::PartyMismatch { .. }) => 4,
            CliError::Core(E::TableCapacity { .. }) => 5,
            // Malformed operator files surface as validation errors from the core.
            CliError::Core(E::NotHermitian { .. } | E::InvalidShape(_) | E::DimensionMismatch { .. } | E::NotPsd { .. }) => 2,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
