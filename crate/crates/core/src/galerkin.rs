//! Galerkin matrices of the periodic spline basis and the projected PWM
//! right-hand side.
//!
//! With `P(τ, d)` the vector of basis functions and `Ts` the switching period:
//!
//! ```text
//! I(d) =  Ts ∫₀¹ P Pᵀ dτ            (Gram / mass)
//! Q(d) = −∫₀¹ ∂P/∂τ Pᵀ dτ           (transport)
//! U(d) =  Ts ∫₀¹ P ∂Pᵀ/∂d dτ        (duty rate)
//! ```
//!
//! Left of the break the basis is a fixed polynomial family in `τ/d`, right of
//! it in `(τ−d)/(1−d)`. Hence `I` is affine in `d` while `Q` and `U` do not
//! depend on `d`; the same holds for the projection of the bipolar PWM pulse.
//! [`affine_decompose`] exploits this and verifies it at a third point.
//!
//! All integrals use Gauss-Legendre with `p + 1` points per knot span, exact
//! for the piecewise polynomial integrands.

use alloc::format;

use crate::basis::SplineBasis;
use crate::circuit::PwmExcitation;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::{Matrix, Vector};

/// Duty cycles used to fit the affine decomposition.
pub const FIT_DUTIES: (f64, f64) = (0.25, 0.75);
/// Duty cycle of the mandatory third-point check.
pub const CHECK_DUTY: f64 = 0.5;
/// Relative tolerance of the third-point check.
pub const AFFINE_TOLERANCE: f64 = 1e-10;

/// The three Galerkin matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalerkinMatrix {
    /// `I(d) = Ts ∫ P Pᵀ dτ`.
    Mass,
    /// `Q(d) = −∫ ∂P/∂τ Pᵀ dτ`.
    Transport,
    /// `U(d) = Ts ∫ P ∂Pᵀ/∂d dτ`.
    DutyRate,
}

impl GalerkinMatrix {
    /// Short name used in reports and error messages.
    pub fn name(self) -> &'static str {
        match self {
            GalerkinMatrix::Mass => "I",
            GalerkinMatrix::Transport => "Q",
            GalerkinMatrix::DutyRate => "U",
        }
    }
}

fn rule(basis: &SplineBasis) -> QuadratureRule {
    QuadratureRule::new(basis.degree() + 1)
}

/// Gram matrix `Ts ∫₀¹ P Pᵀ dτ` at duty `duty`.
pub fn assemble_mass(basis: &SplineBasis, duty: f64, ts: f64) -> Matrix {
    let n = basis.dof_count();
    let mut m = Matrix::zeros(n, n);
    let knots = basis.knots_at(duty);
    for (tau, w) in rule(basis).points(&knots) {
        let v = basis.eval(tau, duty);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    m * ts
}

/// Transport matrix `−∫₀¹ ∂P/∂τ Pᵀ dτ` at duty `duty`.
pub fn assemble_transport(basis: &SplineBasis, duty: f64) -> Matrix {
    let n = basis.dof_count();
    let mut m = Matrix::zeros(n, n);
    let knots = basis.knots_at(duty);
    for (tau, w) in rule(basis).points(&knots) {
        let v = basis.eval(tau, duty);
        let dv = basis.eval_dtau(tau, duty);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= w * dv[i] * v[j];
            }
        }
    }
    m
}

/// Duty-rate matrix `Ts ∫₀¹ P ∂Pᵀ/∂d dτ` at duty `duty`.
pub fn assemble_duty_rate(basis: &SplineBasis, duty: f64, ts: f64) -> Matrix {
    let n = basis.dof_count();
    let mut m = Matrix::zeros(n, n);
    let knots = basis.knots_at(duty);
    for (tau, w) in rule(basis).points(&knots) {
        let v = basis.eval(tau, duty);
        let dd = basis.eval_dduty(tau, duty);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * v[i] * dd[j];
            }
        }
    }
    m * ts
}

/// Dispatches to the assembler of `kind`.
pub fn assemble(kind: GalerkinMatrix, basis: &SplineBasis, duty: f64, ts: f64) -> Matrix {
    match kind {
        GalerkinMatrix::Mass => assemble_mass(basis, duty, ts),
        GalerkinMatrix::Transport => assemble_transport(basis, duty),
        GalerkinMatrix::DutyRate => assemble_duty_rate(basis, duty, ts),
    }
}

/// Matrix depending affinely on the duty cycle: `M(d) = M₀ + d·M₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrix {
    constant: Matrix,
    slope: Matrix,
}

impl AffineMatrix {
    /// Wraps precomputed parts.
    pub fn new(constant: Matrix, slope: Matrix) -> Self {
        assert_eq!(constant.shape(), slope.shape());
        Self { constant, slope }
    }

    /// `M₀`.
    pub fn constant(&self) -> &Matrix {
        &self.constant
    }

    /// `M₁`.
    pub fn slope(&self) -> &Matrix {
        &self.slope
    }

    /// `M₀ + d·M₁`.
    pub fn eval(&self, duty: f64) -> Matrix {
        &self.constant + &self.slope * duty
    }
}

/// Vector depending affinely on the duty cycle: `v(d) = v₀ + d·v₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineVector {
    constant: Vector,
    slope: Vector,
}

impl AffineVector {
    /// `v₀`.
    pub fn constant(&self) -> &Vector {
        &self.constant
    }

    /// `v₁`.
    pub fn slope(&self) -> &Vector {
        &self.slope
    }

    /// `v₀ + d·v₁`.
    pub fn eval(&self, duty: f64) -> Vector {
        &self.constant + &self.slope * duty
    }
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Fits `M(d) = M₀ + d·M₁` from assemblies at `d₀ = 0.25` and `d₁ = 0.75`,
/// then checks the fit against a direct assembly at `d = 0.5`.
///
/// Fails with [`Error::AffineCheckFailed`] if the relative residual of the
/// check exceeds [`AFFINE_TOLERANCE`].
pub fn affine_decompose(
    kind: GalerkinMatrix,
    basis: &SplineBasis,
    ts: f64,
) -> Result<AffineMatrix> {
    let (d0, d1) = FIT_DUTIES;
    let m0 = assemble(kind, basis, d0, ts);
    let m1 = assemble(kind, basis, d1, ts);
    let slope = (&m0 - &m1) / (d0 - d1);
    let constant = &m0 - &slope * d0;
    let fit = AffineMatrix { constant, slope };

    let direct = assemble(kind, basis, CHECK_DUTY, ts);
    // Q and U vanish identically for some bases; measure those against their
    // natural size (1 and Ts) instead of rounding noise.
    let natural = match kind {
        GalerkinMatrix::Transport => 1.0,
        GalerkinMatrix::Mass | GalerkinMatrix::DutyRate => ts,
    };
    let scale = max_abs(&m0)
        .max(max_abs(&m1))
        .max(max_abs(&direct))
        .max(natural);
    let residual = max_abs(&(&direct - fit.eval(CHECK_DUTY)));
    if residual > AFFINE_TOLERANCE * scale {
        return Err(Error::AffineCheckFailed {
            matrix: format!("{}(d)", kind.name()),
            residual: residual / scale,
        });
    }
    Ok(fit)
}

/// Projection of the unit-amplitude bipolar pulse `sgn(d − τ)` onto the
/// basis: `Ts (∫₀^d P dτ − ∫_d^1 P dτ)`.
pub fn pulse_projection(basis: &SplineBasis, duty: f64, ts: f64) -> Vector {
    let n = basis.dof_count();
    let mut out = Vector::zeros(n);
    let knots = basis.knots_at(duty);
    // spans never straddle the break, so the sign is constant per span
    for (tau, w) in rule(basis).points(&knots) {
        let sign = if tau <= duty { 1.0 } else { -1.0 };
        let v = basis.eval(tau, duty);
        for i in 0..n {
            out[i] += sign * w * v[i];
        }
    }
    out * ts
}

/// Precomputed affine-in-`d` projection of the PWM excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProjection {
    unit: AffineVector,
}

impl PulseProjection {
    /// Fits the unit-amplitude projection at `d = 0.25, 0.75` and checks it
    /// at `d = 0.5`.
    pub fn new(basis: &SplineBasis, ts: f64) -> Result<Self> {
        let (d0, d1) = FIT_DUTIES;
        let v0 = pulse_projection(basis, d0, ts);
        let v1 = pulse_projection(basis, d1, ts);
        let slope = (&v0 - &v1) / (d0 - d1);
        let constant = &v0 - &slope * d0;
        let unit = AffineVector { constant, slope };
        let direct = pulse_projection(basis, CHECK_DUTY, ts);
        let scale = v0.amax().max(v1.amax()).max(direct.amax());
        let residual = (&direct - unit.eval(CHECK_DUTY)).amax();
        if residual > AFFINE_TOLERANCE * scale {
            return Err(Error::AffineCheckFailed {
                matrix: "C(d)".into(),
                residual: residual / scale,
            });
        }
        Ok(Self { unit })
    }

    /// Affine parts of the unit-amplitude projection.
    pub fn unit(&self) -> &AffineVector {
        &self.unit
    }

    /// Projection of a pulse of amplitude `amplitude` at duty `duty`.
    pub fn block(&self, amplitude: f64, duty: f64) -> Vector {
        self.unit.eval(duty) * amplitude
    }

    /// Full right-hand side `c ⊗ block` for the per-state PWM coupling
    /// vector `coupling`, at slow time `t1`. State-major layout.
    pub fn project(&self, coupling: &Vector, excitation: &PwmExcitation, t1: f64) -> Vector {
        let block = self.block(excitation.amplitude(), excitation.duty().value(t1));
        coupling.kronecker(&block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DutyCycleProfile;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    const TS: f64 = 2e-4;

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        max_abs(&(a - b))
    }

    /// Composite midpoint rule with `points` cells, split at τ = d.
    fn midpoint_oracle(
        basis: &SplineBasis,
        duty: f64,
        points: usize,
        integrand: impl Fn(&[f64], &[f64], &[f64], usize, usize) -> f64,
    ) -> Matrix {
        let n = basis.dof_count();
        let mut m = Matrix::zeros(n, n);
        let left = ((points as f64) * duty).round() as usize;
        let right = points - left;
        let mut cells: Vec<(f64, f64)> = Vec::with_capacity(points);
        let hl = duty / left as f64;
        cells.extend((0..left).map(|i| ((i as f64 + 0.5) * hl, hl)));
        let hr = (1.0 - duty) / right as f64;
        cells.extend((0..right).map(|i| (duty + (i as f64 + 0.5) * hr, hr)));
        for (tau, h) in cells {
            let v = basis.eval(tau, duty);
            let dt = basis.eval_dtau(tau, duty);
            let dd = basis.eval_dduty(tau, duty);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += h * integrand(&v, &dt, &dd, i, j);
                }
            }
        }
        m
    }

    #[test]
    fn hat_mass_matrix() {
        let b = SplineBasis::uniform(1, 0, 0.5).unwrap();
        for d in [0.5, 0.3] {
            let m = assemble_mass(&b, d, TS);
            let expected =
                Matrix::from_row_slice(2, 2, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]) * TS;
            assert!(max_abs_diff(&m, &expected) < 1e-18, "d = {d}");
        }
    }

    #[test]
    fn hat_transport_and_duty_rate_vanish() {
        let b = SplineBasis::uniform(1, 0, 0.5).unwrap();
        for d in [0.2, 0.5, 0.9] {
            assert!(max_abs(&assemble_transport(&b, d)) < 1e-15);
            assert!(max_abs(&assemble_duty_rate(&b, d, TS)) < 1e-18);
        }
    }

    #[test]
    fn structural_properties() {
        for (p, k) in [(1, 1), (2, 1), (3, 3)] {
            let b = SplineBasis::uniform(p, k, 0.5).unwrap();
            for d in [0.15, 0.5, 0.85] {
                let i = assemble_mass(&b, d, TS);
                assert!(max_abs_diff(&i, &i.transpose()) <= 1e-14 * max_abs(&i));
                let eig = i.clone().symmetric_eigen();
                assert!(eig.eigenvalues.min() > 0.0);

                let q = assemble_transport(&b, d);
                assert!(max_abs(&(&q + q.transpose())) <= 1e-12);
                for c in 0..q.ncols() {
                    assert!(q.column(c).sum().abs() <= 1e-12);
                }

                let u = assemble_duty_rate(&b, d, TS);
                for r in 0..u.nrows() {
                    assert!(u.row(r).sum().abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn duty_independence_of_transport_and_duty_rate() {
        for (p, k) in [(1, 1), (2, 1), (3, 3)] {
            let b = SplineBasis::uniform(p, k, 0.5).unwrap();
            let (q2, q8) = (assemble_transport(&b, 0.2), assemble_transport(&b, 0.8));
            assert!(max_abs_diff(&q2, &q8) <= 1e-10 * max_abs(&q2).max(1.0));
            let (u2, u8) = (
                assemble_duty_rate(&b, 0.2, TS),
                assemble_duty_rate(&b, 0.8, TS),
            );
            assert!(max_abs_diff(&u2, &u8) <= 1e-10 * max_abs(&u2));
        }
    }

    #[test]
    fn affine_fits_pass_their_check() {
        for (p, k) in [(1, 1), (2, 1), (3, 3)] {
            let b = SplineBasis::uniform(p, k, 0.5).unwrap();
            let i = affine_decompose(GalerkinMatrix::Mass, &b, TS).unwrap();
            for d in 1..10 {
                let d = d as f64 / 10.0;
                let direct = assemble_mass(&b, d, TS);
                assert!(max_abs_diff(&direct, &i.eval(d)) <= 1e-10 * max_abs(i.constant()));
            }
            let q = affine_decompose(GalerkinMatrix::Transport, &b, TS).unwrap();
            assert!(max_abs(q.slope()) <= 1e-10 * max_abs(q.constant()).max(1.0));
            let u = affine_decompose(GalerkinMatrix::DutyRate, &b, TS).unwrap();
            assert!(max_abs(u.slope()) <= 1e-10 * max_abs(u.constant()).max(TS));
        }
    }

    #[test]
    fn mass_slope_is_nonzero_for_refined_bases() {
        let b = SplineBasis::uniform(2, 1, 0.5).unwrap();
        let i = affine_decompose(GalerkinMatrix::Mass, &b, TS).unwrap();
        assert!(max_abs(i.slope()) > 1e-3 * max_abs(i.constant()));
    }

    #[test]
    fn transport_matches_midpoint_oracle() {
        let b = SplineBasis::new(2, &[0.5], &[0.5], 0.7).unwrap();
        let q = assemble_transport(&b, 0.7);
        let oracle = midpoint_oracle(&b, 0.7, 100_000, |v, dt, _, i, j| -dt[i] * v[j]);
        assert!(max_abs_diff(&q, &oracle) <= 1e-8 * max_abs(&oracle));
    }

    #[test]
    fn pulse_projection_examples() {
        let b = SplineBasis::uniform(1, 0, 0.5).unwrap();
        let proj = PulseProjection::new(&b, TS).unwrap();
        let at_half = proj.block(350.0, 0.5);
        assert!(at_half.amax() < 1e-15);
        let at_07 = proj.block(350.0, 0.7);
        for v in at_07.iter() {
            assert!((v - 0.014).abs() < 1e-15, "{v}");
        }
        // d → 0⁺: the fit stays exact and approaches the all-off pulse
        for (p, k) in [(1, 1), (2, 1), (3, 3)] {
            let b = SplineBasis::uniform(p, k, 0.5).unwrap();
            let proj = PulseProjection::new(&b, TS).unwrap();
            let d = 1e-9;
            let mut full = Vector::zeros(b.dof_count());
            for (tau, w) in rule(&b).points(&b.knots_at(d)) {
                full += Vector::from_vec(b.eval(tau, d)) * (w * TS);
            }
            let lim = proj.block(350.0, d);
            let direct = pulse_projection(&b, d, TS) * 350.0;
            assert!((&lim - &direct).amax() <= 1e-12 * 350.0 * TS);
            assert!((&lim + full * 350.0).amax() <= 2.0 * 350.0 * TS * d);
        }
    }

    #[test]
    fn projection_uses_coupling_and_duty_profile() {
        let b = SplineBasis::uniform(1, 0, 0.5).unwrap();
        let proj = PulseProjection::new(&b, TS).unwrap();
        let exc =
            PwmExcitation::new(350.0, 5000.0, DutyCycleProfile::constant(0.7).unwrap()).unwrap();
        let c = proj.project(&Vector::from_vec(alloc::vec![1.0, 0.0]), &exc, 0.0123);
        assert_eq!(c.len(), 4);
        assert!((c[0] - 0.014).abs() < 1e-15 && (c[1] - 0.014).abs() < 1e-15);
        assert_eq!((c[2], c[3]), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn structure_holds_at_any_duty(d in 0.05f64..0.95, setting in 0usize..3) {
            let (p, k) = [(1, 1), (2, 1), (3, 3)][setting];
            let b = SplineBasis::uniform(p, k, d).unwrap();
            let i = assemble_mass(&b, d, TS);
            prop_assert!(max_abs_diff(&i, &i.transpose()) <= 1e-14 * max_abs(&i));
            // row sums are Ts ∫ P, which add up to Ts
            prop_assert!((i.sum() - TS).abs() <= 1e-13 * TS);
            let q = assemble_transport(&b, d);
            prop_assert!(max_abs(&(&q + q.transpose())) <= 1e-12);
            let u = assemble_duty_rate(&b, d, TS);
            for r in 0..u.nrows() {
                prop_assert!(u.row(r).sum().abs() <= 1e-12 * TS);
            }
            let c = pulse_projection(&b, d, TS);
            prop_assert!((c.sum() - TS * (2.0 * d - 1.0)).abs() <= 1e-13 * TS);
        }

        #[test]
        fn affine_mass_matches_direct_assembly(d in 0.05f64..0.95, setting in 0usize..3) {
            let (p, k) = [(1, 1), (2, 1), (3, 3)][setting];
            let b = SplineBasis::uniform(p, k, 0.5).unwrap();
            let fit = affine_decompose(GalerkinMatrix::Mass, &b, TS).unwrap();
            let direct = assemble_mass(&b, d, TS);
            prop_assert!(max_abs_diff(&direct, &fit.eval(d)) <= 1e-10 * max_abs(&direct));
        }
    }
}
