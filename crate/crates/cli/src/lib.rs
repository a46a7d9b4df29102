//! Command-line front end for the ocean SAR simulation and despeckling
//! chain.
//!
//! The binary exposes five subcommands — `simulate`, `speckle`,
//! `despeckle`, `evaluate` and `pipeline` — that wire the `oceansar-core`
//! modules into reproducible, file-based experiments:
//!
//! * [`config`] — the JSON experiment description with full defaulting,
//!   validation and scale presets (desk-size scene vs. full-size scene).
//! * [`raster`] — the float raster exchange format, grayscale PNG export
//!   and per-output metadata sidecars.
//! * [`report`] — per-run score records and the benchmark table
//!   (methods × looks) in aligned text and delimiter-separated form.
//! * [`commands`] — the five subcommands as library functions, so
//!   integration tests can drive them without spawning processes.
//!
//! Everything is deterministic: a config fixes every seed, outputs carry
//! no timestamps, and two runs of the same experiment produce
//! byte-identical files.

use std::path::Path;

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod raster;
pub mod report;

pub use commands::{cmd_despeckle, cmd_evaluate, cmd_pipeline, cmd_simulate, cmd_speckle};
pub use config::{ExperimentConfig, Overrides, Scale};

/// Crate version, for embedding in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit code for configuration / input validation failures.
pub const EXIT_VALIDATION: i32 = 1;
/// Process exit code for numerical or runtime failures.
pub const EXIT_RUNTIME: i32 = 2;

/// Front-end errors, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, config files or input files (exit code 1).
    #[error("{0}")]
    Validation(String),
    /// Numerical failures and output I/O failures (exit code 2).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<oceansar_core::Error> for CliError {
    fn from(e: oceansar_core::Error) -> Self {
        match e {
            oceansar_core::Error::Numerical(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reading an input is a validation concern: the user pointed at the file.
pub(crate) fn read_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("cannot read {}: {e}", path.display()))
}

/// Failing to write an output is a runtime concern.
pub(crate) fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}
