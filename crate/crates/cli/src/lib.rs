//! Experiment driver: config parsing, runs, summaries and invariant suites.

use std::path::PathBuf;

pub mod analysis;
pub mod config;
pub mod run;
pub mod setup;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("oracle failed: {0}")]
    Oracle(cobadd::Error),

    #[error(transparent)]
    Solver(#[from] cobadd::Error),

    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
}
