//! Conventional transient solve of `A·x' + B·x = b_in·v(t)` with exact
//! location of every PWM switching instant.
//!
//! Inside each switching period the carrier crosses the duty signal exactly
//! once. Those crossings and the carrier resets split the time axis into
//! segments with a constant input, and the circuit is integrated segment by
//! segment with the multistep history discarded at every boundary.

use alloc::vec::Vec;

use crate::circuit::{LinearCircuit, PwmExcitation};
use crate::error::{Error, Result};
use crate::integrator::{Bdf, DescriptorSystem, SolverConfig, SolverStats, Trajectory};
use crate::{Matrix, Vector};

/// Bisection iterations per switching period.
const MAX_BISECTIONS: usize = 50;
/// Tolerance of the ground-truth solve.
pub const ORACLE_TOLERANCE: f64 = 1e-12;
/// Step limit of the ground-truth solve, relative to the switching period.
pub const ORACLE_MAX_STEP_FRACTION: f64 = 1e-3;

/// Time interval with a constant PWM level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Segment start.
    pub start: f64,
    /// Segment end.
    pub end: f64,
    /// True for `+v̂`, false for `−v̂`.
    pub on: bool,
}

/// Switching instants, carrier resets and the constant-input segments
/// between them.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGrid {
    /// Duty crossings `t*`, ascending.
    pub switch_times: Vec<f64>,
    /// Carrier resets `k·Ts` strictly inside the span.
    pub resets: Vec<f64>,
    /// Segments covering the span in order.
    pub segments: Vec<Segment>,
}

/// Crossing of `d(t)` and the carrier inside period `k`, as a fraction of
/// the period. `g(u) = d((k+u)·Ts) − u` is positive at 0 and negative at 1.
fn crossing(exc: &PwmExcitation, k: i64) -> Result<f64> {
    let ts = exc.period();
    let g = |u: f64| exc.duty().value((k as f64 + u) * ts) - u;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return Err(Error::NoSignChange {
            period: k.max(0) as u64,
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the switching instants of `exc` within `t_span`.
///
/// Fails with [`Error::NoSignChange`] if the duty cycle leaves `(0, 1)` in
/// some period.
pub fn find_switch_times(exc: &PwmExcitation, t_span: (f64, f64)) -> Result<EventGrid> {
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::InvalidParameter {
            name: "t_span",
            value: t1 - t0,
            reason: "must have positive length",
        });
    }
    let ts = exc.period();
    let first = libm::floor(t0 / ts) as i64;
    let last = libm::ceil(t1 / ts) as i64;
    let mut grid = EventGrid {
        switch_times: Vec::new(),
        resets: Vec::new(),
        segments: Vec::new(),
    };
    let push = |segments: &mut Vec<Segment>, start: f64, end: f64, on: bool| {
        let (start, end) = (start.max(t0), end.min(t1));
        if end > start {
            segments.push(Segment { start, end, on });
        }
    };
    for k in first..last {
        let start = k as f64 * ts;
        let end = (k + 1) as f64 * ts;
        if end <= t0 || start >= t1 {
            continue;
        }
        if start > t0 {
            grid.resets.push(start);
        }
        let t_star = (k as f64 + crossing(exc, k)?) * ts;
        if t_star > t0 && t_star < t1 {
            grid.switch_times.push(t_star);
        }
        push(&mut grid.segments, start, t_star, true);
        push(&mut grid.segments, t_star, end, false);
    }
    Ok(grid)
}

/// The circuit driven by a constant input level.
struct Driven<'a> {
    circuit: &'a LinearCircuit,
    level: f64,
}

impl DescriptorSystem for Driven<'_> {
    fn dim(&self) -> usize {
        self.circuit.dim()
    }

    fn matrices(&self, _t: f64, mass: &mut Matrix, stiffness: &mut Matrix) {
        mass.copy_from(self.circuit.a());
        stiffness.copy_from(self.circuit.b());
    }

    fn forcing(&self, _t: f64, out: &mut Vector) {
        out.copy_from(self.circuit.input());
        *out *= self.level;
    }

    fn constant_matrices(&self) -> bool {
        true
    }
}

/// Integrates `circuit` over consecutive segments with input `±amplitude`,
/// starting from `x0`. The solver restarts at order 1 on every segment but
/// keeps its factorizations.
pub fn solve_segments(
    circuit: &LinearCircuit,
    amplitude: f64,
    segments: &[Segment],
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<(Trajectory, SolverStats)> {
    let Some(first) = segments.first() else {
        return Err(Error::InvalidParameter {
            name: "segments",
            value: 0.0,
            reason: "need at least one segment",
        });
    };
    let mut bdf = Bdf::new(*cfg)?;
    let mut traj = Trajectory::new(first.start, x0.as_slice());
    let mut stats = SolverStats::default();
    let mut x = x0.clone();
    for seg in segments {
        let sys = Driven {
            circuit,
            level: if seg.on { amplitude } else { -amplitude },
        };
        let (part, s) = bdf.integrate(&sys, (seg.start, seg.end), &x)?;
        x.copy_from_slice(part.last_state());
        traj.append(&part);
        stats += s;
    }
    Ok((traj, stats))
}

/// Event-aware solve of the switched circuit from its `x0`.
///
/// Without an explicit `max_step` the step is capped at `Ts/2`.
pub fn solve_reference(
    circuit: &LinearCircuit,
    exc: &PwmExcitation,
    t_span: (f64, f64),
    cfg: &SolverConfig,
) -> Result<(Trajectory, SolverStats)> {
    let mut cfg = *cfg;
    if cfg.max_step.is_none() {
        cfg.max_step = Some(0.5 * exc.period());
    }
    let grid = find_switch_times(exc, t_span)?;
    solve_segments(circuit, exc.amplitude(), &grid.segments, circuit.x0(), &cfg)
}

/// Solver settings of the ground-truth solve for switching period `ts`.
pub fn oracle_config(ts: f64) -> SolverConfig {
    SolverConfig::with_tolerance(ORACLE_TOLERANCE).max_step(ORACLE_MAX_STEP_FRACTION * ts)
}

/// Ground-truth waveform: [`solve_reference`] at tolerance `1e-12` with the
/// step capped at `Ts/1000`.
pub fn make_reference_oracle(
    circuit: &LinearCircuit,
    exc: &PwmExcitation,
    t_span: (f64, f64),
) -> Result<(Trajectory, SolverStats)> {
    solve_reference(circuit, exc, t_span, &oracle_config(exc.period()))
}
