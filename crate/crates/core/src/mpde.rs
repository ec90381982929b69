//! Reduced envelope system for the spline coefficients and reconstruction of
//! the circuit waveform.
//!
//! Expanding each state as `x̂_j(t₁, t₂) = P(τ(t₂), d(t₁))ᵀ·w_j(t₁)` and
//! testing with the basis over one switching period gives
//!
//! ```text
//! 𝒜(t)·w' + ℬ(t)·w = 𝒞(t)
//! 𝒜 = A ⊗ I(d),   ℬ = B ⊗ I(d) + A ⊗ Q + d'·A ⊗ U,   𝒞 = b_in ⊗ v̂·Ts(∫₀^d P − ∫_d^1 P)
//! ```
//!
//! with state-major coefficient ordering. All duty dependence is affine, so
//! the Kronecker blocks are formed once and every evaluation is a handful of
//! scaled matrix sums. The circuit waveform is read off the diagonal
//! `x(t) = x̂(t, t)`.

use alloc::vec::Vec;

use crate::basis::SplineBasis;
use crate::circuit::{LinearCircuit, PwmExcitation};
use crate::error::{Error, Result};
use crate::galerkin::{affine_decompose, GalerkinMatrix, PulseProjection};
use crate::integrator::{Bdf, DescriptorSystem, SolverConfig, SolverStats, Trajectory};
use crate::{Matrix, Vector};

/// How the envelope coefficients are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Periodic steady state of the reduced system at the start time,
    /// shifted per state so the waveform starts at `x0`.
    #[default]
    SteadyShift,
    /// Every coefficient of state `j` set to `x0_j` (flat ripple).
    Zero,
}

/// Reduced envelope system built from a circuit, a basis and a PWM source.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    circuit: LinearCircuit,
    basis: SplineBasis,
    excitation: PwmExcitation,
    projection: PulseProjection,
    // A⊗I₀, A⊗I₁, B⊗I₀, B⊗I₁, A⊗Q, A⊗U
    a_i0: Matrix,
    a_i1: Matrix,
    b_i0: Matrix,
    b_i1: Matrix,
    a_q: Matrix,
    a_u: Matrix,
    c0: Vector,
    c1: Vector,
}

impl ReducedSystem {
    /// Assembles the affine Galerkin parts and their Kronecker products.
    ///
    /// Propagates [`Error::AffineCheckFailed`] from the decomposition.
    pub fn new(
        circuit: LinearCircuit,
        basis: SplineBasis,
        excitation: PwmExcitation,
    ) -> Result<Self> {
        let ts = excitation.period();
        let mass = affine_decompose(GalerkinMatrix::Mass, &basis, ts)?;
        let transport = affine_decompose(GalerkinMatrix::Transport, &basis, ts)?;
        let duty_rate = affine_decompose(GalerkinMatrix::DutyRate, &basis, ts)?;
        let projection = PulseProjection::new(&basis, ts)?;

        // Q and U are duty independent: use their values at the check point.
        let q = transport.eval(0.5);
        let u = duty_rate.eval(0.5);
        let a = circuit.a();
        let b = circuit.b();
        let unit = projection.unit();
        let amp = excitation.amplitude();
        Ok(Self {
            a_i0: a.kronecker(mass.constant()),
            a_i1: a.kronecker(mass.slope()),
            b_i0: b.kronecker(mass.constant()),
            b_i1: b.kronecker(mass.slope()),
            a_q: a.kronecker(&q),
            a_u: a.kronecker(&u),
            c0: circuit.input().kronecker(unit.constant()) * amp,
            c1: circuit.input().kronecker(unit.slope()) * amp,
            circuit,
            basis,
            excitation,
            projection,
        })
    }

    /// Underlying circuit.
    pub fn circuit(&self) -> &LinearCircuit {
        &self.circuit
    }

    /// Spline basis of the ripple.
    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    /// PWM source.
    pub fn excitation(&self) -> &PwmExcitation {
        &self.excitation
    }

    /// Affine projection of the PWM pulse.
    pub fn projection(&self) -> &PulseProjection {
        &self.projection
    }

    /// Number of circuit states `N_s`.
    pub fn n_states(&self) -> usize {
        self.circuit.dim()
    }

    /// Number of basis functions `N_b`.
    pub fn n_dofs(&self) -> usize {
        self.basis.dof_count()
    }

    /// `𝒜(t) = A ⊗ I(d(t))`.
    pub fn mass_at(&self, t: f64) -> Matrix {
        let d = self.excitation.duty().value(t);
        &self.a_i0 + &self.a_i1 * d
    }

    /// `ℬ(t) = B ⊗ I(d) + A ⊗ Q + d'·A ⊗ U`.
    pub fn stiffness_at(&self, t: f64) -> Matrix {
        let duty = self.excitation.duty();
        let (d, dd) = (duty.value(t), duty.derivative(t));
        &self.b_i0 + &self.b_i1 * d + &self.a_q + &self.a_u * dd
    }

    /// `𝒞(t)`.
    pub fn rhs_at(&self, t: f64) -> Vector {
        let d = self.excitation.duty().value(t);
        &self.c0 + &self.c1 * d
    }

    /// Periodic steady state `ℬ(t)⁻¹·𝒞(t)` of the reduced system frozen at `t`.
    pub fn steady_state(&self, t: f64) -> Result<Vector> {
        let lu = self.stiffness_at(t).lu();
        if !lu.is_invertible() {
            return Err(Error::SingularMatrix("computing the periodic steady state"));
        }
        lu.solve(&self.rhs_at(t))
            .ok_or(Error::SingularMatrix("computing the periodic steady state"))
    }

    /// Waveform `x̂(t, t)` of coefficient vector `w` at time `t`.
    pub fn waveform(&self, w: &Vector, t: f64) -> Vector {
        let p = self
            .basis
            .eval(self.excitation.carrier(t), self.excitation.duty().value(t));
        combine(&p, w, self.n_states())
    }

    /// Initial coefficients at `t0` whose waveform equals `x0` at `t0`.
    ///
    /// With [`InitMode::SteadyShift`] the steady state `wˢ` is computed and
    /// every coefficient of state `j` is lowered by `x̂ˢ_j(t0, t0) − x0_j`;
    /// partition of unity makes the shifted waveform start exactly at `x0`.
    pub fn initial_coefficients(&self, t0: f64, x0: &Vector, mode: InitMode) -> Result<Vector> {
        let ns = self.n_states();
        if x0.len() != ns {
            return Err(Error::DimensionMismatch {
                expected: ns,
                got: x0.len(),
            });
        }
        let nb = self.n_dofs();
        match mode {
            InitMode::Zero => Ok(Vector::from_fn(ns * nb, |i, _| x0[i / nb])),
            InitMode::SteadyShift => {
                let mut w = self.steady_state(t0)?;
                let start = self.waveform(&w, t0);
                for j in 0..ns {
                    let shift = start[j] - x0[j];
                    w.rows_mut(j * nb, nb).add_scalar_mut(-shift);
                }
                Ok(w)
            }
        }
    }

    /// Integrates the envelope over `t_span` from the circuit's `x0`.
    pub fn solve(
        &self,
        t_span: (f64, f64),
        cfg: &SolverConfig,
        mode: InitMode,
    ) -> Result<(MpdeSolution, SolverStats)> {
        let w0 = self.initial_coefficients(t_span.0, self.circuit.x0(), mode)?;
        let (envelope, stats) = Bdf::new(*cfg)?.integrate(self, t_span, &w0)?;
        Ok((
            MpdeSolution {
                envelope,
                basis: self.basis.clone(),
                excitation: self.excitation,
                n_states: self.n_states(),
            },
            stats,
        ))
    }
}

impl DescriptorSystem for ReducedSystem {
    fn dim(&self) -> usize {
        self.n_states() * self.n_dofs()
    }

    fn matrices(&self, t: f64, mass: &mut Matrix, stiffness: &mut Matrix) {
        let duty = self.excitation.duty();
        let (d, dd) = (duty.value(t), duty.derivative(t));
        mass.copy_from(&self.a_i0);
        add_scaled(mass, d, &self.a_i1);
        stiffness.copy_from(&self.b_i0);
        add_scaled(stiffness, d, &self.b_i1);
        *stiffness += &self.a_q;
        add_scaled(stiffness, dd, &self.a_u);
    }

    fn forcing(&self, t: f64, out: &mut Vector) {
        let d = self.excitation.duty().value(t);
        out.copy_from(&self.c0);
        out.axpy(d, &self.c1, 1.0);
    }

    fn constant_matrices(&self) -> bool {
        self.excitation.duty().is_constant()
    }
}

fn add_scaled(dst: &mut Matrix, s: f64, src: &Matrix) {
    dst.zip_apply(src, |a, b| *a += s * b);
}

fn combine(p: &[f64], w: &Vector, n_states: usize) -> Vector {
    let nb = p.len();
    Vector::from_fn(n_states, |j, _| {
        p.iter()
            .zip(w.rows(j * nb, nb).iter())
            .map(|(a, b)| a * b)
            .sum()
    })
}

/// Envelope trajectory plus what is needed to rebuild the waveform.
#[derive(Debug, Clone)]
pub struct MpdeSolution {
    envelope: Trajectory,
    basis: SplineBasis,
    excitation: PwmExcitation,
    n_states: usize,
}

impl MpdeSolution {
    /// Coefficient trajectory `w(t₁)`, state-major.
    pub fn envelope(&self) -> &Trajectory {
        &self.envelope
    }

    /// Switching period.
    pub fn period(&self) -> f64 {
        self.excitation.period()
    }

    /// Waveform `x(t) = P(τ(t), d(t))ᵀ·w(t)` at one time.
    pub fn state_at(&self, t: f64) -> Result<Vector> {
        let w = self.envelope.dense_eval(t)?;
        let p = self
            .basis
            .eval(self.excitation.carrier(t), self.excitation.duty().value(t));
        Ok(combine(&p, &w, self.n_states))
    }

    /// Samples the waveform at `times` (ascending) into a piecewise-linear
    /// trajectory.
    pub fn reconstruct(&self, times: &[f64]) -> Result<Trajectory> {
        let states = times
            .iter()
            .map(|&t| self.state_at(t))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::from_samples(times.to_vec(), states)
    }
}
