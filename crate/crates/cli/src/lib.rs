//! Experiment driver: configs, subcommands, dumps and the acceptance battery.

pub mod accept;
pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical precondition failed: {0}")]
    Numerical(String),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Acceptance(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

/// Input-shaped library errors are config errors; the rest are numerical.
impl From<magweyl::Error> for CliError {
    fn from(e: magweyl::Error) -> Self {
        match e {
            magweyl::Error::Io(io) => CliError::Io(io),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}
