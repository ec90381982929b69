//! Error type shared by every module of the crate.

use alloc::string::String;

/// Convenience alias for results produced by this crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong while building or solving a model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Duty cycle outside the open interval (0, 1).
    #[error("duty cycle {0} is outside (0, 1)")]
    InvalidDuty(f64),

    /// Spline degree must be at least one.
    #[error("spline degree must be >= 1, got {0}")]
    InvalidDegree(usize),

    /// Refinement abscissae must be strictly ascending inside (0, 1).
    #[error(
        "refinement abscissae {which} must be strictly ascending in (0, 1) with length {expected}"
    )]
    InvalidRefinement {
        /// `"alphas"` or `"betas"`.
        which: &'static str,
        /// Required number of abscissae.
        expected: usize,
    },

    /// A physical or numerical parameter violated its precondition.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: f64,
        /// Short description of the violated constraint.
        reason: &'static str,
    },

    /// The sinusoidal duty profile would leave (0, 1).
    #[error("duty profile leaves (0, 1): modulation index {0} must be < 1")]
    DutyOutOfRange(f64),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Expected length.
        expected: usize,
        /// Actual length.
        got: usize,
    },

    /// The three-point affine check of a Galerkin matrix failed.
    #[error(
        "affine duty-cycle decomposition of {matrix} failed: residual {residual:e} (relative)"
    )]
    AffineCheckFailed {
        /// Matrix name.
        matrix: String,
        /// Relative residual at the check point.
        residual: f64,
    },

    /// A matrix that must be invertible was found singular.
    #[error("singular matrix while {0}")]
    SingularMatrix(&'static str),

    /// The step-size controller shrank the step below the floor.
    #[error("step size underflow at t = {t:e}: h = {h:e}")]
    StepSizeUnderflow {
        /// Time of the failing step.
        t: f64,
        /// Rejected step size.
        h: f64,
    },

    /// A time lies outside the span covered by a trajectory or solve.
    #[error("time {t:e} outside [{start:e}, {end:e}]")]
    OutOfSpan {
        /// Requested time.
        t: f64,
        /// Span start.
        start: f64,
        /// Span end.
        end: f64,
    },

    /// The duty/carrier difference does not change sign inside a period.
    #[error("no switching event in period {period}: duty left (0, 1)")]
    NoSignChange {
        /// Index of the switching period.
        period: u64,
    },

    /// The reference signal of an L2 comparison vanishes identically.
    #[error("reference signal has zero L2 norm")]
    ZeroReferenceNorm,
}
