//! Adaptive BDF1/2 for linear descriptor systems `M(t)·x' + N(t)·x = f(t)`.
//!
//! The scheme keeps its history on an equally spaced grid (fixed leading
//! coefficient form): when the step size changes, the back values are
//! re-interpolated onto the new spacing. The iteration matrix
//! `γ/h·M + N` then only depends on `h` and the order, so for constant
//! `M`, `N` its LU factorization is reused for as long as `h` stays put.
//!
//! Because the system is linear every step is a single linear solve; there is
//! no Newton loop. The local error is estimated from the difference between
//! the corrector and the polynomial extrapolation of the history.

use alloc::vec::Vec;

use nalgebra::linalg::LU;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

type Lu = LU<f64, Dyn, Dyn>;

/// Step size floor relative to the integration span.
const MIN_STEP_FRACTION: f64 = 1e-14;
/// Initial step relative to the integration span.
const INITIAL_STEP_FRACTION: f64 = 1e-4;
/// Proposed step changes smaller than this factor are not taken.
const STEP_HYSTERESIS: f64 = 1.1;

/// Error controls and step limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Absolute tolerance.
    pub abstol: f64,
    /// Relative tolerance.
    pub reltol: f64,
    /// Highest BDF order, 1 or 2.
    pub max_order: usize,
    /// Upper bound on the step size.
    pub max_step: Option<f64>,
    /// First step size; defaults to `min(max_step, 1e-4·span)`.
    pub initial_step: Option<f64>,
    /// When false every step is accepted and `initial_step` is kept fixed.
    pub adaptive: bool,
}

impl SolverConfig {
    /// `abstol = reltol = tol`, order 2, no step limit.
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            abstol: tol,
            reltol: tol,
            max_order: 2,
            max_step: None,
            initial_step: None,
            adaptive: true,
        }
    }

    /// Fixed step `h` without error control.
    pub fn fixed_step(h: f64, max_order: usize) -> Self {
        Self {
            abstol: 1.0,
            reltol: 1.0,
            max_order,
            max_step: None,
            initial_step: Some(h),
            adaptive: false,
        }
    }

    /// Sets the maximum step.
    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    /// Sets the maximum order.
    pub fn max_order(mut self, order: usize) -> Self {
        self.max_order = order;
        self
    }

    /// Checks the invariants on tolerances, order and step limits.
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if !(self.abstol > 0.0) {
            return bad("abstol", self.abstol, "must be positive");
        }
        if !(self.reltol > 0.0) {
            return bad("reltol", self.reltol, "must be positive");
        }
        if !(1..=2).contains(&self.max_order) {
            return bad("max_order", self.max_order as f64, "must be 1 or 2");
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad("max_step", h, "must be positive");
            }
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return bad("initial_step", h, "must be positive");
            }
        }
        if !self.adaptive && self.initial_step.is_none() {
            return bad("initial_step", f64::NAN, "required for fixed-step runs");
        }
        Ok(())
    }
}

/// Work counters of one or more integrations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    /// Accepted steps.
    pub accepted_steps: u64,
    /// Rejected step attempts.
    pub failed_steps: u64,
    /// LU factorizations.
    pub lu_factorizations: u64,
    /// Evaluations of the system (matrices and/or forcing at one time).
    pub function_evaluations: u64,
    /// Forward/backward substitutions.
    pub linear_solves: u64,
}

impl core::ops::AddAssign for SolverStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted_steps += o.accepted_steps;
        self.failed_steps += o.failed_steps;
        self.lu_factorizations += o.lu_factorizations;
        self.function_evaluations += o.function_evaluations;
        self.linear_solves += o.linear_solves;
    }
}

/// Linear descriptor system `M(t)·x' + N(t)·x = f(t)`.
pub trait DescriptorSystem {
    /// State dimension.
    fn dim(&self) -> usize;

    /// Writes `M(t)` and `N(t)`.
    fn matrices(&self, t: f64, mass: &mut Matrix, stiffness: &mut Matrix);

    /// Writes `f(t)`.
    fn forcing(&self, t: f64, out: &mut Vector);

    /// True when `M` and `N` do not depend on `t`.
    fn constant_matrices(&self) -> bool {
        false
    }
}

/// Time series of states with a per-step interpolant.
///
/// Step `s` runs from `times[s]` to `times[s + 1]`. A first-order step
/// interpolates linearly; a second-order step uses the quadratic through
/// `(t_s − h, back_s)`, `(t_s, x_s)`, `(t_{s+1}, x_{s+1})` with
/// `h = t_{s+1} − t_s`, which is the polynomial the BDF2 step collocated.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    orders: Vec<u8>,
    back: Vec<f64>,
}

impl Trajectory {
    /// Trajectory holding only the initial point.
    pub fn new(t0: f64, x0: &[f64]) -> Self {
        Self {
            dim: x0.len(),
            times: alloc::vec![t0],
            states: x0.to_vec(),
            orders: Vec::new(),
            back: Vec::new(),
        }
    }

    /// Piecewise-linear trajectory through the given samples.
    pub fn from_samples(times: Vec<f64>, states: Vec<Vector>) -> Result<Self> {
        let dim = states.first().map_or(0, |s| s.len());
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        let mut flat = Vec::with_capacity(dim * states.len());
        for s in &states {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            flat.extend(s.iter());
        }
        let steps = times.len().saturating_sub(1);
        Ok(Self {
            dim,
            times,
            states: flat,
            orders: alloc::vec![1; steps],
            back: alloc::vec![0.0; steps * dim],
        })
    }

    fn push_step(&mut self, t: f64, x: &Vector, order: u8, back: &Vector) {
        self.times.push(t);
        self.states.extend(x.iter());
        self.orders.push(order);
        self.back.extend(back.iter());
    }

    /// Appends `other`, which must start where `self` ends. The duplicated
    /// junction point is dropped.
    pub fn append(&mut self, other: &Trajectory) {
        debug_assert_eq!(self.dim, other.dim);
        let skip = usize::from(other.times[0] <= *self.times.last().unwrap());
        self.times.extend_from_slice(&other.times[skip..]);
        self.states
            .extend_from_slice(&other.states[skip * self.dim..]);
        self.orders.extend_from_slice(&other.orders);
        self.back.extend_from_slice(&other.back);
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Never true: a trajectory holds at least its initial point.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Stored times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// State at stored point `i`.
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Last stored state.
    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// First stored time.
    pub fn start(&self) -> f64 {
        self.times[0]
    }

    /// Last stored time.
    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// BDF order used for each step.
    pub fn orders(&self) -> &[u8] {
        &self.orders
    }

    fn locate(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::OutOfSpan {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        let idx = self.times.partition_point(|&x| x <= t);
        Ok(idx.saturating_sub(1).min(self.len().saturating_sub(2)))
    }

    /// Evaluates the stored step interpolant at `t`.
    pub fn dense_eval(&self, t: f64) -> Result<Vector> {
        let mut out = Vector::zeros(self.dim);
        self.dense_eval_into(t, &mut out)?;
        Ok(out)
    }

    /// [`dense_eval`](Self::dense_eval) into a caller-provided buffer.
    pub fn dense_eval_into(&self, t: f64, out: &mut Vector) -> Result<()> {
        let s = self.locate(t)?;
        if self.len() == 1 {
            out.copy_from_slice(self.state(0));
            return Ok(());
        }
        let (t0, t1) = (self.times[s], self.times[s + 1]);
        let (x0, x1) = (self.state(s), self.state(s + 1));
        let theta = (t - t0) / (t1 - t0);
        if self.orders[s] >= 2 {
            let back = &self.back[s * self.dim..(s + 1) * self.dim];
            let lm = 0.5 * theta * (theta - 1.0);
            let l0 = 1.0 - theta * theta;
            let l1 = 0.5 * theta * (theta + 1.0);
            for i in 0..self.dim {
                out[i] = lm * back[i] + l0 * x0[i] + l1 * x1[i];
            }
        } else {
            for i in 0..self.dim {
                out[i] = x0[i] + theta * (x1[i] - x0[i]);
            }
        }
        Ok(())
    }

    /// Linear interpolation of component `component` between stored points.
    pub fn interpolate_linear(&self, t: f64, component: usize) -> Result<f64> {
        let s = self.locate(t)?;
        if self.len() == 1 {
            return Ok(self.state(0)[component]);
        }
        let (t0, t1) = (self.times[s], self.times[s + 1]);
        let (a, b) = (self.state(s)[component], self.state(s + 1)[component]);
        Ok(a + (t - t0) / (t1 - t0) * (b - a))
    }
}

/// Integrates `sys` over `t_span` from `x0` with a fresh solver.
pub fn integrate<S: DescriptorSystem + ?Sized>(
    sys: &S,
    t_span: (f64, f64),
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<(Trajectory, SolverStats)> {
    Bdf::new(*cfg)?.integrate(sys, t_span, x0)
}

/// BDF1/2 solver. Keeps LU factorizations of constant-matrix systems alive
/// across calls so piecewise solves of the same circuit can share them.
#[derive(Debug, Clone)]
pub struct Bdf {
    cfg: SolverConfig,
    cache: Option<FactorCache>,
}

#[derive(Debug, Clone)]
struct FactorCache {
    mass: Matrix,
    stiffness: Matrix,
    mass_lu: Lu,
    step: Option<(f64, usize, Lu)>,
}

const GAMMA: [f64; 2] = [1.0, 1.5];

impl Bdf {
    /// Solver for `cfg`.
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, cache: None })
    }

    /// Configuration.
    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Integrates from `x0` at `t_span.0` to `t_span.1`, starting at order 1.
    pub fn integrate<S: DescriptorSystem + ?Sized>(
        &mut self,
        sys: &S,
        t_span: (f64, f64),
        x0: &Vector,
    ) -> Result<(Trajectory, SolverStats)> {
        let n = sys.dim();
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
        let (t0, t_end) = t_span;
        let span = t_end - t0;
        if !(span > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_span",
                value: span,
                reason: "must have positive length",
            });
        }
        let cfg = self.cfg;
        let constant = sys.constant_matrices();
        let mut stats = SolverStats::default();
        let mut traj = Trajectory::new(t0, x0.as_slice());

        let mut mass = Matrix::zeros(n, n);
        let mut stiff = Matrix::zeros(n, n);
        let mut force = Vector::zeros(n);
        sys.matrices(t0, &mut mass, &mut stiff);
        sys.forcing(t0, &mut force);
        stats.function_evaluations += 1;

        // x'(t0) = M⁻¹(f − N·x0)
        let reuse = constant
            && self
                .cache
                .as_ref()
                .is_some_and(|c| c.mass == mass && c.stiffness == stiff);
        if !reuse {
            let lu = mass.clone().lu();
            stats.lu_factorizations += 1;
            if !lu.is_invertible() {
                return Err(Error::SingularMatrix(
                    "factoring the mass matrix at the start",
                ));
            }
            self.cache = Some(FactorCache {
                mass: mass.clone(),
                stiffness: stiff.clone(),
                mass_lu: lu,
                step: None,
            });
        }
        let cache = self.cache.as_mut().unwrap();
        let mut xp0 = &force - &stiff * x0;
        cache.mass_lu.solve_mut(&mut xp0);
        stats.linear_solves += 1;

        let max_step = cfg.max_step.unwrap_or(f64::INFINITY);
        let mut h = cfg
            .initial_step
            .unwrap_or_else(|| max_step.min(span * INITIAL_STEP_FRACTION))
            .min(span);
        if cfg.adaptive {
            h = h.min(max_step);
        }
        let h_min = MIN_STEP_FRACTION * span;

        // history on the grid t, t − h, t − 2h
        let mut hist = [x0.clone(), x0 - &xp0 * h, Vector::zeros(n)];
        let mut valid = 2usize;
        let mut order = 1usize;
        let mut real_points = 1usize;
        let mut consecutive_failures = 0u32;
        let mut t = t0;

        let mut pred = Vector::zeros(n);
        let mut rhs = Vector::zeros(n);
        let mut x_new = Vector::zeros(n);

        while t < t_end {
            let remaining = t_end - t;
            let last = STEP_HYSTERESIS * h >= remaining;
            if last && h != remaining {
                rescale(&mut hist, valid, remaining / h);
                h = remaining;
            }
            let t_new = if last { t_end } else { t + h };

            // predictor: polynomial extrapolation of the history
            pred.copy_from(&hist[0]);
            if order == 1 {
                pred *= 2.0;
                pred -= &hist[1];
            } else {
                pred *= 3.0;
                pred.axpy(-3.0, &hist[1], 1.0);
                pred += &hist[2];
            }

            if !constant {
                sys.matrices(t_new, &mut mass, &mut stiff);
            }
            sys.forcing(t_new, &mut force);
            stats.function_evaluations += 1;

            let gamma = GAMMA[order - 1];
            let cached = constant
                && cache
                    .step
                    .as_ref()
                    .is_some_and(|(hc, kc, _)| *hc == h && *kc == order);
            if !cached {
                let step_matrix = &mass * (gamma / h) + &stiff;
                let lu = step_matrix.lu();
                stats.lu_factorizations += 1;
                if !lu.is_invertible() {
                    return Err(Error::SingularMatrix("factoring the step matrix"));
                }
                cache.step = Some((h, order, lu));
            }
            let lu = &cache.step.as_ref().unwrap().2;

            // rhs = f + M·(history combination)/h
            if order == 1 {
                rhs.copy_from(&hist[0]);
            } else {
                rhs.copy_from(&hist[0]);
                rhs *= 2.0;
                rhs.axpy(-0.5, &hist[1], 1.0);
            }
            x_new.gemv(1.0 / h, &mass, &rhs, 0.0);
            x_new += &force;
            lu.solve_mut(&mut x_new);
            stats.linear_solves += 1;

            // The full predictor difference is taken as the error, without the
            // order's error constant. It overestimates the local error and keeps
            // the accumulated error near the tolerance.
            let err = wrms(&x_new, &pred, &hist[0], &cfg);

            if !cfg.adaptive || err <= 1.0 {
                stats.accepted_steps += 1;
                consecutive_failures = 0;
                traj.push_step(t_new, &x_new, order as u8, &hist[1]);
                hist.rotate_right(1);
                hist[0].copy_from(&x_new);
                valid = (valid + 1).min(3);
                real_points += 1;
                t = t_new;

                let used_order = order;
                if order < cfg.max_order && real_points >= 3 {
                    order = 2;
                }
                if cfg.adaptive && t < t_end {
                    let ratio = step_ratio(err, used_order).min(5.0);
                    let target = (h * ratio).min(max_step);
                    if ratio >= STEP_HYSTERESIS && target > h {
                        rescale(&mut hist, valid, target / h);
                        h = target;
                    }
                }
            } else {
                stats.failed_steps += 1;
                consecutive_failures += 1;
                let mut ratio = step_ratio(err, order).clamp(0.2, 0.9);
                if consecutive_failures >= 2 {
                    order = 1;
                    ratio = ratio.min(0.5);
                }
                let target = h * ratio;
                if target < h_min {
                    return Err(Error::StepSizeUnderflow { t, h: target });
                }
                rescale(&mut hist, valid, ratio);
                h = target;
            }
        }
        Ok((traj, stats))
    }
}

fn step_ratio(err: f64, order: usize) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        0.9 * libm::pow(err, -1.0 / (order as f64 + 1.0))
    }
}

/// Weighted RMS norm of `a − b` with weights `abstol + reltol·max(|a|, |r|)`.
fn wrms(a: &Vector, b: &Vector, r: &Vector, cfg: &SolverConfig) -> f64 {
    let n = a.len();
    let mut sum = 0.0;
    for i in 0..n {
        let w = cfg.abstol + cfg.reltol * a[i].abs().max(r[i].abs());
        let e = (a[i] - b[i]) / w;
        sum += e * e;
    }
    libm::sqrt(sum / n as f64)
}

/// Re-interpolates the back values from spacing `h` to `ratio·h`.
fn rescale(hist: &mut [Vector; 3], valid: usize, ratio: f64) {
    let (s1, s2) = (ratio, 2.0 * ratio);
    if valid >= 3 {
        let lag = |s: f64| {
            [
                (s - 1.0) * (s - 2.0) / 2.0,
                -s * (s - 2.0),
                s * (s - 1.0) / 2.0,
            ]
        };
        let (a, b) = (lag(s1), lag(s2));
        let new1 = &hist[0] * a[0] + &hist[1] * a[1] + &hist[2] * a[2];
        let new2 = &hist[0] * b[0] + &hist[1] * b[1] + &hist[2] * b[2];
        hist[1] = new1;
        hist[2] = new2;
    } else {
        let slope = &hist[1] - &hist[0];
        hist[1] = &hist[0] + &slope * s1;
        hist[2] = &hist[0] + &slope * s2;
    }
}
