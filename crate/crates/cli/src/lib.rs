//! Configuration-driven experiments for the `coophx` command-line tool.
//!
//! An experiment compares the closed forms of [`coophx_core`] with the Monte
//! Carlo simulator on a grid, writes one CSV per curve plus a JSON summary,
//! and reports whether every curve stays within the configured tolerance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{load_config, parse_config, preset, ExperimentKind, ExperimentSpec, FIGURE_IDS};
pub use experiment::{run_experiment, ComparisonReport, CurveSummary, RunOverrides, Summary};
pub use output::Table;

/// Process exit status for each outcome.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const TOLERANCE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{}invalid {field}: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { field: String, reason: String, line: Option<usize> },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(coophx_core::Error),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), reason: reason.into(), line: None }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Invalid { .. } => exit::CONFIG,
            Self::Io { .. } | Self::Csv(_) | Self::Core(_) => exit::RUNTIME,
        }
    }
}

impl From<coophx_core::Error> for CliError {
    fn from(e: coophx_core::Error) -> Self {
        match e {
            coophx_core::Error::InvalidParameter { field, reason } => Self::invalid(field, reason),
            other => Self::Core(other),
        }
    }
}
