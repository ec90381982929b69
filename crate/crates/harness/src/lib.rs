//! Experiment harness for `mpde-core`: JSON configuration, the oracle,
//! reference and envelope runs, error reports, tolerance sweeps, and CSV/JSON
//! output.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

pub mod config;
pub mod experiment;
pub mod io;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiment::{
    run_comparison, run_mpde, run_reference, sweep_tolerances, verify_duty_dependence, Oracle,
};
pub use report::{ComparisonReport, DutyDependenceReport, MethodReport, StatsReport, SweepRow};

/// Harness failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// File system failure.
    #[error("{}: {message}", path.display())]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying message.
        message: String,
    },
    /// Failure inside a solver or model constructor.
    #[error(transparent)]
    Core(#[from] mpde_core::Error),
    /// Malformed CSV input.
    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// Short machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Core(_) => "solver",
            Self::Csv(_) => "csv",
        }
    }
}
