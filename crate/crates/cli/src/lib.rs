//! Command-line front end: subject CSV ingestion, TOML run configuration
//! and the `fit`, `probs`, `curves`, `corr`, `simulate` and `study` commands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;

use std::path::Path;

use crate::cli::Command;
use crate::config::MANIFEST;
use crate::error::CliError;

/// Resolves the configuration, writes the manifest and runs the command.
pub fn run(command: &Command) -> Result<(), CliError> {
    let cfg = command.resolve()?;
    let out: &Path = &command.common().out;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(MANIFEST), cfg.to_toml()?)?;
    idm::parallel::with_threads(cfg.threads, || commands::execute(command.name(), &cfg, out))?
}
