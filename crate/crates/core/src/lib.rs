//! Multirate envelope simulation of linear circuits driven by pulse width
//! modulated sources with a slowly varying duty cycle.
//!
//! The fast, switching-period ripple is expanded into a periodic B-spline
//! basis whose C⁰ break tracks the duty cycle. A Galerkin projection over one
//! switching period turns the two-time-scale problem into a linear descriptor
//! system for the slowly varying spline coefficients, which is integrated with
//! an adaptive BDF1/2 scheme taking steps far longer than the switching period.
//!
//! The crate also carries a conventional event-located transient solver used
//! as the accuracy baseline, and the relative L2 error metric used to compare
//! the two.
//!
//! - [`basis`]: periodic spline basis with a break at the duty cycle
//! - [`galerkin`]: Gram, transport and duty-rate matrices, right-hand side
//! - [`circuit`]: linear descriptor circuits, PWM excitation, duty profiles
//! - [`integrator`]: adaptive BDF1/2 for `M(t)·x' + N(t)·x = f(t)`
//! - [`mpde`]: reduced system assembly, initialization, reconstruction
//! - [`reference`]: switch-event location and piecewise reference solves
//! - [`metrics`]: relative L2 error on a midpoint grid
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]
#![warn(missing_docs)]
// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod basis;
pub mod circuit;
pub mod error;
pub mod galerkin;
pub mod integrator;
pub mod metrics;
pub mod mpde;
pub mod quadrature;
pub mod reference;

pub use basis::{KnotVector, SplineBasis};
pub use circuit::{BuckParameters, DutyCycleProfile, LinearCircuit, PwmExcitation};
pub use error::{Error, Result};
pub use galerkin::{AffineMatrix, AffineVector, GalerkinMatrix};
pub use integrator::{DescriptorSystem, SolverConfig, SolverStats, Trajectory};
pub use mpde::{InitMode, MpdeSolution, ReducedSystem};
pub use reference::{EventGrid, Segment};

/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
