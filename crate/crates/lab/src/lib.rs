//! Std companion to `stasep-core`: parallel replica drivers, file formats,
//! run manifests, named check suites and the `stasep` command line.

pub mod cli;
pub mod config;
pub mod criteria;
pub mod io;
pub mod parallel;
pub mod suites;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] stasep_core::error::Error),
}
