//! Experiment driver: configuration, commands, CSV reports and the acceptance
//! suite.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

use crate::error::CritError;
pub use config::{ConfigError, ExperimentConfig};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CRITERION_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] CritError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report {path}: {message}")]
    Report { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical(_) => exit::NUMERICAL,
            HarnessError::Config(_) | HarnessError::Io { .. } | HarnessError::Report { .. } => exit::CONFIG,
        }
    }
}
