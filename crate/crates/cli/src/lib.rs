//! Batch harness: runs scenarios over seeds, compares generative models and
//! inspects NEEM stores.

pub mod report;
pub mod scenario;
pub mod stats;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("comparison needs at least {need} seeds, got {got}")]
    InsufficientSeeds { got: usize, need: usize },
    #[error("{failed} of {runs} runs did not succeed")]
    ScenarioFailure { failed: usize, runs: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) | CliError::InsufficientSeeds { .. } | CliError::Io(_) => 1,
            CliError::ScenarioFailure { .. } => 2,
            CliError::Invariant(_) => 3,
        }
    }
}
