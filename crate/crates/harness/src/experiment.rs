//! Orchestration of oracle, reference and envelope runs.

use std::time::Instant;

use mpde_core::galerkin::{assemble, GalerkinMatrix};
use mpde_core::metrics::{midpoint_grid, relative_l2};
use mpde_core::reference::{self, oracle_config};
use mpde_core::{
    LinearCircuit, Matrix, MpdeSolution, PwmExcitation, ReducedSystem, SolverConfig, SolverStats,
    SplineBasis, Trajectory, Vector,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InitConfig, SolverSettings};
use crate::io::Waveform;
use crate::report::{
    Alternates, ComparisonReport, DutyDependenceReport, MethodReport, Speedup, SweepEntry,
    SweepRow, Tolerances,
};
use crate::Error;

/// State index of the inductor current.
pub const CURRENT: usize = 0;
/// State index of the capacitor voltage.
pub const VOLTAGE: usize = 1;

/// Fit and check duties of the affine verification.
const FIT: (f64, f64, f64) = (0.25, 0.75, 0.5);
/// Duties compared for the duty-independent matrices.
const INDEPENDENCE: (f64, f64) = (0.2, 0.8);
/// Threshold of all duty-dependence checks.
pub const DUTY_DEPENDENCE_TOLERANCE: f64 = 1e-10;

/// Ground-truth solve sampled on the midpoint error grid.
#[derive(Debug, Clone)]
pub struct Oracle {
    circuit: LinearCircuit,
    excitation: PwmExcitation,
    span: (f64, f64),
    samples_per_cycle: usize,
    grid: Vec<f64>,
    current: Vec<f64>,
    voltage: Vec<f64>,
    stats: SolverStats,
    wall_clock_s: f64,
}

impl Oracle {
    /// Runs the ground-truth solve for the circuit, source and window of `cfg`.
    pub fn compute(cfg: &ExperimentConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let circuit = cfg.circuit()?;
        let excitation = cfg.excitation()?;
        let span = cfg.span();
        let start = Instant::now();
        let (traj, stats) = reference::make_reference_oracle(&circuit, &excitation, span)?;
        let wall_clock_s = start.elapsed().as_secs_f64();
        let grid = midpoint_grid(span, cfg.samples_per_cycle, excitation.period())?;
        let sample = |c: usize| -> Result<Vec<f64>, Error> {
            Ok(grid
                .iter()
                .map(|&t| traj.interpolate_linear(t, c))
                .collect::<Result<_, _>>()?)
        };
        Ok(Self {
            current: sample(CURRENT)?,
            voltage: sample(VOLTAGE)?,
            circuit,
            excitation,
            span,
            samples_per_cycle: cfg.samples_per_cycle,
            grid,
            stats,
            wall_clock_s,
        })
    }

    /// Whether this oracle applies to `cfg`.
    pub fn matches(&self, cfg: &ExperimentConfig) -> bool {
        cfg.circuit().is_ok_and(|c| c == self.circuit)
            && cfg.excitation().is_ok_and(|e| e == self.excitation)
            && cfg.span() == self.span
            && cfg.samples_per_cycle == self.samples_per_cycle
    }

    /// Midpoint error grid.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Oracle capacitor voltage on the grid.
    pub fn voltage(&self) -> &[f64] {
        &self.voltage
    }

    /// Oracle inductor current on the grid.
    pub fn current(&self) -> &[f64] {
        &self.current
    }

    /// Effort of the ground-truth solve.
    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// `(ε_v, ε_i)` of a waveform given as a function of time.
    pub fn errors(
        &self,
        mut state: impl FnMut(f64) -> Result<Vector, Error>,
    ) -> Result<(f64, f64), Error> {
        let mut v = Vec::with_capacity(self.grid.len());
        let mut i = Vec::with_capacity(self.grid.len());
        for &t in &self.grid {
            let x = state(t)?;
            v.push(x[VOLTAGE]);
            i.push(x[CURRENT]);
        }
        Ok((
            relative_l2(&self.voltage, &v)?,
            relative_l2(&self.current, &i)?,
        ))
    }

    /// Errors of a piecewise-linear trajectory.
    pub fn trajectory_errors(&self, traj: &Trajectory) -> Result<(f64, f64), Error> {
        self.errors(|t| {
            Ok(Vector::from_vec(vec![
                traj.interpolate_linear(t, CURRENT)?,
                traj.interpolate_linear(t, VOLTAGE)?,
            ]))
        })
    }

    /// Errors of a reconstructed envelope solution.
    pub fn mpde_errors(&self, sol: &MpdeSolution) -> Result<(f64, f64), Error> {
        self.errors(|t| Ok(sol.state_at(t)?))
    }

    /// The oracle as a method report with zero errors.
    pub fn report(&self) -> MethodReport {
        MethodReport {
            eps_v: 0.0,
            eps_i: 0.0,
            stats: self.stats.into(),
            wall_clock_s: self.wall_clock_s,
        }
    }

    fn ensure_matches(&self, cfg: &ExperimentConfig) -> Result<(), Error> {
        if self.matches(cfg) {
            Ok(())
        } else {
            Err(Error::Config(
                "oracle was computed for a different circuit, source or window".into(),
            ))
        }
    }
}

/// Envelope solve of one configuration.
#[derive(Debug, Clone)]
pub struct MpdeRun {
    /// Reduced system that was integrated.
    pub system: ReducedSystem,
    /// Envelope and reconstruction data.
    pub solution: MpdeSolution,
    /// Effort counters.
    pub stats: SolverStats,
    /// Wall-clock time of the solve in s.
    pub wall_clock_s: f64,
}

impl MpdeRun {
    /// Reconstructed waveform on `samples_per_cycle` equal steps per period,
    /// endpoints included.
    pub fn waveform(&self, samples_per_cycle: usize) -> Result<Waveform, Error> {
        let env = self.solution.envelope();
        let times = output_times(
            (env.start(), env.end()),
            samples_per_cycle,
            self.solution.period(),
        );
        let traj = self.solution.reconstruct(&times)?;
        Ok(waveform_of(&traj, self.system.circuit().labels()))
    }
}

/// Reference solve of one configuration.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    /// Solver output with one point per accepted step.
    pub trajectory: Trajectory,
    /// Effort counters.
    pub stats: SolverStats,
    /// Wall-clock time of the solve in s.
    pub wall_clock_s: f64,
    /// State names.
    pub labels: Vec<String>,
}

impl ReferenceRun {
    /// Solver output at the accepted step times.
    pub fn waveform(&self) -> Waveform {
        waveform_of(&self.trajectory, &self.labels)
    }
}

fn waveform_of(traj: &Trajectory, labels: &[String]) -> Waveform {
    Waveform {
        labels: labels.to_vec(),
        times: traj.times().to_vec(),
        values: (0..traj.len()).map(|i| traj.state(i).to_vec()).collect(),
    }
}

/// `t0 + i·Ts/n` up to and including `t1`.
pub fn output_times(span: (f64, f64), samples_per_cycle: usize, ts: f64) -> Vec<f64> {
    let h = ts / samples_per_cycle as f64;
    let n = ((span.1 - span.0) / h).round() as usize;
    (0..=n)
        .map(|i| {
            if i == n {
                span.1
            } else {
                span.0 + i as f64 * h
            }
        })
        .collect()
}

fn run_mpde_with(
    cfg: &ExperimentConfig,
    solver: &SolverSettings,
    init: InitConfig,
) -> Result<MpdeRun, Error> {
    let system = ReducedSystem::new(cfg.circuit()?, cfg.basis()?, cfg.excitation()?)?;
    let start = Instant::now();
    let (solution, stats) = system.solve(cfg.span(), &solver.to_solver(), init.into())?;
    Ok(MpdeRun {
        system,
        solution,
        stats,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

fn run_reference_with(cfg: &ExperimentConfig, solver: SolverConfig) -> Result<ReferenceRun, Error> {
    let circuit = cfg.circuit()?;
    let excitation = cfg.excitation()?;
    let start = Instant::now();
    let (trajectory, stats) =
        reference::solve_reference(&circuit, &excitation, cfg.span(), &solver)?;
    Ok(ReferenceRun {
        trajectory,
        stats,
        wall_clock_s: start.elapsed().as_secs_f64(),
        labels: circuit.labels().to_vec(),
    })
}

/// Envelope solve with the configured settings.
pub fn run_mpde(cfg: &ExperimentConfig) -> Result<MpdeRun, Error> {
    cfg.validate()?;
    run_mpde_with(cfg, &cfg.mpde_solver, cfg.init)
}

/// Reference solve with the configured settings.
pub fn run_reference(cfg: &ExperimentConfig) -> Result<ReferenceRun, Error> {
    cfg.validate()?;
    run_reference_with(cfg, cfg.reference_solver.to_solver())
}

fn mpde_report(
    cfg: &ExperimentConfig,
    oracle: &Oracle,
    solver: &SolverSettings,
    init: InitConfig,
) -> Result<MethodReport, Error> {
    let run = run_mpde_with(cfg, solver, init)?;
    let (eps_v, eps_i) = oracle.mpde_errors(&run.solution)?;
    Ok(MethodReport {
        eps_v,
        eps_i,
        stats: run.stats.into(),
        wall_clock_s: run.wall_clock_s,
    })
}

fn reference_report(
    cfg: &ExperimentConfig,
    oracle: &Oracle,
    solver: SolverConfig,
) -> Result<MethodReport, Error> {
    let run = run_reference_with(cfg, solver)?;
    let (eps_v, eps_i) = oracle.trajectory_errors(&run.trajectory)?;
    Ok(MethodReport {
        eps_v,
        eps_i,
        stats: run.stats.into(),
        wall_clock_s: run.wall_clock_s,
    })
}

/// Envelope and reference solves at the configured tolerances, both scored
/// against `oracle`, plus a flat-ripple start and a first-order reference.
pub fn run_comparison(cfg: &ExperimentConfig, oracle: &Oracle) -> Result<ComparisonReport, Error> {
    cfg.validate()?;
    oracle.ensure_matches(cfg)?;
    let mpde = mpde_report(cfg, oracle, &cfg.mpde_solver, cfg.init)?;
    let reference = reference_report(cfg, oracle, cfg.reference_solver.to_solver())?;
    let mpde_zero_init = match cfg.init {
        InitConfig::Zero => mpde.clone(),
        InitConfig::SteadyShift => mpde_report(cfg, oracle, &cfg.mpde_solver, InitConfig::Zero)?,
    };
    let reference_first_order =
        reference_report(cfg, oracle, cfg.reference_solver.to_solver().max_order(1))?;
    let ts = cfg.excitation()?.period();
    let oracle_solver = oracle_config(ts);
    Ok(ComparisonReport {
        config: cfg.clone(),
        omega: cfg.span(),
        samples_per_cycle: cfg.samples_per_cycle,
        tolerances: Tolerances {
            mpde: (cfg.mpde_solver.abstol, cfg.mpde_solver.reltol),
            reference: (cfg.reference_solver.abstol, cfg.reference_solver.reltol),
            oracle: (oracle_solver.abstol, oracle_solver.reltol),
        },
        oracle: oracle.report(),
        speedup: Speedup::new(&reference.stats, &mpde.stats),
        mpde,
        reference,
        alternates: Alternates {
            mpde_zero_init,
            reference_first_order,
        },
    })
}

/// One comparison per tolerance, with `abstol = reltol = tol` for both
/// solves. Tolerances run in parallel; rows come back in input order.
pub fn sweep_tolerances(
    cfg: &ExperimentConfig,
    tolerances: &[f64],
    oracle: &Oracle,
) -> Result<Vec<SweepRow>, Error> {
    cfg.validate()?;
    oracle.ensure_matches(cfg)?;
    if let Some(bad) = tolerances.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::Config(format!("tolerance {bad} must be positive")));
    }
    let (lo, hi) = tolerances
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
    if tolerances.len() < 3 || hi / lo < 1e3 * (1.0 - 1e-12) {
        return Err(Error::Config(
            "a sweep needs at least 3 tolerances spanning 3 decades".into(),
        ));
    }
    tolerances
        .par_iter()
        .map(|&tol| {
            let m = mpde_report(cfg, oracle, &cfg.mpde_solver.with_tolerance(tol), cfg.init)?;
            let r = reference_report(
                cfg,
                oracle,
                cfg.reference_solver.with_tolerance(tol).to_solver(),
            )?;
            let entry = |m: MethodReport| SweepEntry {
                eps_v: m.eps_v,
                eps_i: m.eps_i,
                stats: m.stats,
            };
            Ok(SweepRow {
                tol,
                mpde: entry(m),
                reference: entry(r),
            })
        })
        .collect()
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks that `I` is affine in the duty cycle and that `Q` and `U` do not
/// depend on it, for the uniform basis of degree `degree` and refinement
/// `refinement` with `Ts = 1`.
pub fn verify_duty_dependence(
    degree: usize,
    refinement: usize,
) -> Result<DutyDependenceReport, Error> {
    let basis = SplineBasis::uniform(degree, refinement, 0.5)?;
    let ts = 1.0;
    let (d0, d1, dc) = FIT;
    let (m0, m1) = (
        assemble(GalerkinMatrix::Mass, &basis, d0, ts),
        assemble(GalerkinMatrix::Mass, &basis, d1, ts),
    );
    let fit = &m0 + (&m1 - &m0) * ((dc - d0) / (d1 - d0));
    let direct = assemble(GalerkinMatrix::Mass, &basis, dc, ts);
    let mass_fit_residual = max_abs(&(&direct - fit)) / max_abs(&direct);

    let change = |kind| {
        let (a, b) = (
            assemble(kind, &basis, INDEPENDENCE.0, ts),
            assemble(kind, &basis, INDEPENDENCE.1, ts),
        );
        // Q and U may vanish identically; never divide by less than one.
        max_abs(&(&a - &b)) / max_abs(&a).max(max_abs(&b)).max(1.0)
    };
    let transport_change = change(GalerkinMatrix::Transport);
    let duty_rate_change = change(GalerkinMatrix::DutyRate);
    let passed = [mass_fit_residual, transport_change, duty_rate_change]
        .iter()
        .all(|&r| r <= DUTY_DEPENDENCE_TOLERANCE);
    Ok(DutyDependenceReport {
        degree,
        refinement,
        mass_fit_residual,
        transport_change,
        duty_rate_change,
        tolerance: DUTY_DEPENDENCE_TOLERANCE,
        passed,
    })
}
