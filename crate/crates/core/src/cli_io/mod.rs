//! Configuration files, checkpoints, CSV output and the per-command drivers
//! behind the `muskat` binary.

mod checkpoint;
mod commands;
mod config;
mod csv;

use std::path::PathBuf;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::experiments::{FitError, StaircaseError};
use crate::spectral::SpectralError;

pub use checkpoint::{checkpoint_read, checkpoint_write};
pub use commands::{execute, resolve_out_dir, write_threshold_curve, CommandOutcome};
pub use config::{parse_config, parse_config_for, Experiment, RunConfig, KEYS};
pub use csv::{
    emit_csv, emit_table, format_number, parse_trajectory_csv, read_csv, trajectory_csv, write_text, TRAJECTORY_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{key}': {reason}")]
    BadValue { key: String, reason: String },
    #[error("missing required key '{0}'")]
    MissingRequired(String),
    #[error("line {line}: expected key = value, got '{text}'")]
    Syntax { line: usize, text: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("snapshot format version {found}, this build reads {expected}")]
    FormatVersionMismatch { found: u64, expected: u32 },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("i/o failure on {path}: {source}")]
    IoFailure { path: PathBuf, source: std::io::Error },
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Staircase(#[from] StaircaseError),
    #[error("sweep member {label} failed: {reason}")]
    SweepMember { label: String, reason: String },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::IoFailure { path: path.into(), source }
    }
}
