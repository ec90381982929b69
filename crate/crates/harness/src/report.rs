//! Serializable run summaries.

use mpde_core::SolverStats;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Effort counters of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsReport {
    /// Accepted time steps.
    pub accepted_steps: u64,
    /// Rejected time steps.
    pub failed_steps: u64,
    /// LU factorizations.
    pub lu_factorizations: u64,
    /// Matrix and right-hand side evaluations.
    pub function_evaluations: u64,
    /// Triangular solves.
    pub linear_solves: u64,
}

impl From<SolverStats> for StatsReport {
    fn from(s: SolverStats) -> Self {
        Self {
            accepted_steps: s.accepted_steps,
            failed_steps: s.failed_steps,
            lu_factorizations: s.lu_factorizations,
            function_evaluations: s.function_evaluations,
            linear_solves: s.linear_solves,
        }
    }
}

/// Accuracy and effort of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    /// Relative L2 error of the capacitor voltage.
    pub eps_v: f64,
    /// Relative L2 error of the inductor current.
    pub eps_i: f64,
    /// Effort counters.
    pub stats: StatsReport,
    /// Wall-clock time of the solve in s.
    pub wall_clock_s: f64,
}

/// Ratios `reference / mpde` of the effort counters. `None` when the
/// envelope counter is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    /// Accepted steps.
    pub time_steps: Option<f64>,
    /// Rejected steps.
    pub failed_steps: Option<f64>,
    /// LU factorizations.
    pub lu_factorizations: Option<f64>,
    /// Triangular solves.
    pub linear_solves: Option<f64>,
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl Speedup {
    /// Ratios of `reference` to `mpde`.
    pub fn new(reference: &StatsReport, mpde: &StatsReport) -> Self {
        Self {
            time_steps: ratio(reference.accepted_steps, mpde.accepted_steps),
            failed_steps: ratio(reference.failed_steps, mpde.failed_steps),
            lu_factorizations: ratio(reference.lu_factorizations, mpde.lu_factorizations),
            linear_solves: ratio(reference.linear_solves, mpde.linear_solves),
        }
    }
}

/// Tolerances of the two working-accuracy solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Envelope solve `(abstol, reltol)`.
    pub mpde: (f64, f64),
    /// Reference solve `(abstol, reltol)`.
    pub reference: (f64, f64),
    /// Oracle `(abstol, reltol)`.
    pub oracle: (f64, f64),
}

/// Runs reported next to the main comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternates {
    /// Envelope solve started from a flat ripple.
    pub mpde_zero_init: MethodReport,
    /// Reference solve capped at order 1.
    pub reference_first_order: MethodReport,
}

/// Side-by-side comparison of the envelope and reference solves against
/// the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Configuration echo.
    pub config: ExperimentConfig,
    /// Error window in s.
    pub omega: (f64, f64),
    /// Error samples per switching period.
    pub samples_per_cycle: usize,
    /// Tolerances used.
    pub tolerances: Tolerances,
    /// Oracle effort; its errors are zero by definition.
    pub oracle: MethodReport,
    /// Envelope solve.
    pub mpde: MethodReport,
    /// Reference solve.
    pub reference: MethodReport,
    /// Reference-to-envelope effort ratios.
    pub speedup: Speedup,
    /// Extra runs.
    pub alternates: Alternates,
}

/// Errors and effort without timing, for reproducible tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// Relative L2 error of the capacitor voltage.
    pub eps_v: f64,
    /// Relative L2 error of the inductor current.
    pub eps_i: f64,
    /// Effort counters.
    pub stats: StatsReport,
}

/// One tolerance of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `abstol = reltol` of both solves.
    pub tol: f64,
    /// Envelope solve.
    pub mpde: SweepEntry,
    /// Reference solve.
    pub reference: SweepEntry,
}

/// Outcome of the duty-dependence checks of the Galerkin matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyDependenceReport {
    /// Degree `p`.
    pub degree: usize,
    /// Refinement `K`.
    pub refinement: usize,
    /// Relative residual of the affine fit of `I` at the check duty.
    pub mass_fit_residual: f64,
    /// Largest entry change of `Q` between `d = 0.2` and `d = 0.8`, relative
    /// to its largest entry.
    pub transport_change: f64,
    /// Largest entry change of `U` between `d = 0.2` and `d = 0.8`, relative
    /// to its largest entry.
    pub duty_rate_change: f64,
    /// Threshold applied to all three.
    pub tolerance: f64,
    /// Whether every check is within the threshold.
    pub passed: bool,
}
