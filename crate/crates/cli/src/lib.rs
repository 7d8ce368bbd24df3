//! Library side of the `olfactor` binary: configuration handling and the
//! subcommand implementations, kept here so they can be tested in-process.

pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or inputs, detected before any work starts.
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error(transparent)]
    Runtime(#[from] olfactor::Error),

    #[error("{failed} of {total} gradient checks exceeded the tolerance")]
    GradCheckFailed { failed: usize, total: usize },

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(vec![message.into()])
    }

    /// 1 for validation failures, 2 for failures during the run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(
                olfactor::Error::LabelMismatch(_) | olfactor::Error::SchemaVersionMismatch(_),
            ) => 1,
            _ => 2,
        }
    }
}
