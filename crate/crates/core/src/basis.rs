//! Periodic B-spline basis on the relative time `τ ∈ [0, 1]` with a C⁰ break
//! at the duty cycle `d`.
//!
//! The open knot vector is
//!
//! ```text
//! {0 (p+1 times), α₁d, …, α_K d, d (p times), β₁(1−d)+d, …, β_K(1−d)+d, 1 (p+1 times)}
//! ```
//!
//! which yields `2p + 2K + 1` raw B-splines. The first and last raw functions
//! are merged into a single periodic "wrap" function (degree of freedom 0), so
//! the basis has `2p + 2K` degrees of freedom and still sums to one.
//!
//! Knot positions move with `d`; every evaluation takes the duty cycle as an
//! argument and re-parameterizes the knots on the fly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Knot vector with a `p`-fold interior knot at the duty cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    duty: f64,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    knots: Vec<f64>,
}

fn check_abscissae(values: &[f64], expected: usize, which: &'static str) -> Result<()> {
    let ok = values.len() == expected
        && values.iter().all(|&v| v > 0.0 && v < 1.0)
        && values.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidRefinement { which, expected })
    }
}

fn check_duty(duty: f64) -> Result<()> {
    if duty > 0.0 && duty < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDuty(duty))
    }
}

fn fill_knots(degree: usize, alphas: &[f64], betas: &[f64], duty: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(core::iter::repeat_n(0.0, degree + 1));
    out.extend(alphas.iter().map(|a| a * duty));
    out.extend(core::iter::repeat_n(duty, degree));
    out.extend(betas.iter().map(|b| b * (1.0 - duty) + duty));
    out.extend(core::iter::repeat_n(1.0, degree + 1));
}

impl KnotVector {
    /// Builds the knot vector for degree `degree`, refinement abscissae
    /// `alphas` (left of the break) and `betas` (right of it), at duty `duty`.
    pub fn new(degree: usize, alphas: &[f64], betas: &[f64], duty: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(degree));
        }
        check_duty(duty)?;
        let k = alphas.len();
        check_abscissae(alphas, k, "alphas")?;
        check_abscissae(betas, k, "betas")?;
        let mut knots = Vec::with_capacity(3 * degree + 2 * k + 2);
        fill_knots(degree, alphas, betas, duty, &mut knots);
        Ok(Self {
            degree,
            duty,
            alphas: alphas.to_vec(),
            betas: betas.to_vec(),
            knots,
        })
    }

    /// Same refinement at a different duty cycle.
    pub fn with_duty(&self, duty: f64) -> Result<Self> {
        Self::new(self.degree, &self.alphas, &self.betas, duty)
    }

    /// Knot positions, non-decreasing.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Spline degree `p`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Duty cycle the knots are placed for.
    pub fn duty(&self) -> f64 {
        self.duty
    }

    /// Number of refinement knots on each side of the break.
    pub fn refinement(&self) -> usize {
        self.alphas.len()
    }

    /// Relative positions of the refinement knots left of the break.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Relative positions of the refinement knots right of the break.
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Knot positions for this refinement at another duty cycle, without
    /// validation.
    pub(crate) fn knots_at(&self, duty: f64, out: &mut Vec<f64>) {
        fill_knots(self.degree, &self.alphas, &self.betas, duty, out);
    }
}

/// Which one-sided limit to take when `τ` sits exactly on a knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Limit from the right (the default everywhere except `τ = 1`).
    Right,
    /// Limit from the left.
    Left,
}

/// Periodic B-spline basis built on a [`KnotVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    knots: KnotVector,
}

impl SplineBasis {
    /// Basis of degree `degree` with explicit refinement abscissae.
    pub fn new(degree: usize, alphas: &[f64], betas: &[f64], duty: f64) -> Result<Self> {
        Ok(Self {
            knots: KnotVector::new(degree, alphas, betas, duty)?,
        })
    }

    /// Basis with `refinement` uniformly spaced abscissae `k / (K + 1)` on
    /// both sides of the break.
    pub fn uniform(degree: usize, refinement: usize, duty: f64) -> Result<Self> {
        let abscissae: Vec<f64> = (1..=refinement)
            .map(|k| k as f64 / (refinement as f64 + 1.0))
            .collect();
        Self::new(degree, &abscissae, &abscissae, duty)
    }

    /// Underlying knot vector at the nominal duty cycle.
    pub fn knot_vector(&self) -> &KnotVector {
        &self.knots
    }

    /// Spline degree `p`.
    pub fn degree(&self) -> usize {
        self.knots.degree
    }

    /// Refinement count `K`.
    pub fn refinement(&self) -> usize {
        self.knots.refinement()
    }

    /// Number of raw B-splines, `2p + 2K + 1`.
    pub fn raw_count(&self) -> usize {
        self.knots.knots.len() - self.knots.degree - 1
    }

    /// Number of periodic degrees of freedom, `2p + 2K`.
    pub fn dof_count(&self) -> usize {
        self.raw_count() - 1
    }

    /// Degree of freedom a raw B-spline contributes to.
    pub fn dof_of_raw(&self, raw: usize) -> usize {
        if raw == self.raw_count() - 1 {
            0
        } else {
            raw
        }
    }

    /// Knot positions at duty `duty`.
    pub fn knots_at(&self, duty: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.knots.knots_at(duty, &mut out);
        out
    }

    /// Basis values `p_k(τ, d)`.
    pub fn eval(&self, tau: f64, duty: f64) -> Vec<f64> {
        self.eval_sided(tau, duty, Side::Right)
    }

    /// Basis values using the given one-sided limit at knots. Values are
    /// continuous, so both sides agree up to rounding.
    pub fn eval_sided(&self, tau: f64, duty: f64, side: Side) -> Vec<f64> {
        let raw = self.raw_eval(tau, duty, side, false);
        self.merge(&raw.values)
    }

    /// Derivatives `∂p_k/∂τ`. At knots where the derivative jumps the
    /// right-sided limit is returned (left-sided at `τ = 1`).
    pub fn eval_dtau(&self, tau: f64, duty: f64) -> Vec<f64> {
        self.eval_dtau_sided(tau, duty, Side::Right)
    }

    /// Derivatives `∂p_k/∂τ` with an explicit one-sided limit at knots.
    pub fn eval_dtau_sided(&self, tau: f64, duty: f64, side: Side) -> Vec<f64> {
        let raw = self.raw_eval(tau, duty, side, true);
        self.merge(&raw.dtau)
    }

    /// Derivatives `∂p_k/∂d` at fixed `τ`.
    ///
    /// Left of the break every function is a fixed polynomial of `τ/d`, right
    /// of it a fixed polynomial of `(τ−d)/(1−d)`, so
    ///
    /// ```text
    /// ∂p/∂d = −(τ/d)·∂p/∂τ              for τ < d
    /// ∂p/∂d = −((1−τ)/(1−d))·∂p/∂τ      for τ > d
    /// ```
    ///
    /// At `τ = d` only the break function is nonzero and it equals one for
    /// every `d`, so the derivative along the moving break is returned: zero.
    pub fn eval_dduty(&self, tau: f64, duty: f64) -> Vec<f64> {
        if tau == duty {
            return vec![0.0; self.dof_count()];
        }
        let raw = self.raw_eval(tau, duty, Side::Right, true);
        let scale = if tau < duty {
            -tau / duty
        } else {
            -(1.0 - tau) / (1.0 - duty)
        };
        let mut out = self.merge(&raw.dtau);
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    fn merge(&self, raw: &[f64]) -> Vec<f64> {
        let n = self.dof_count();
        let mut out = raw[..n].to_vec();
        out[0] += raw[n];
        out
    }

    /// Cox-de Boor recursion over all raw functions, with `0/0 := 0`.
    fn raw_eval(&self, tau: f64, duty: f64, side: Side, derivative: bool) -> RawEval {
        let p = self.knots.degree;
        let mut knots = Vec::with_capacity(self.knots.knots.len());
        self.knots.knots_at(duty, &mut knots);
        let m = knots.len();
        let span = find_span(&knots, tau, side);

        let mut current = vec![0.0; m - 1];
        current[span] = 1.0;
        let mut lower = Vec::new();
        for k in 1..=p {
            let mut next = vec![0.0; m - 1 - k];
            for (j, slot) in next.iter_mut().enumerate() {
                let mut v = 0.0;
                let left = knots[j + k] - knots[j];
                if left > 0.0 && current[j] != 0.0 {
                    v += (tau - knots[j]) / left * current[j];
                }
                let right = knots[j + k + 1] - knots[j + 1];
                if right > 0.0 && current[j + 1] != 0.0 {
                    v += (knots[j + k + 1] - tau) / right * current[j + 1];
                }
                *slot = v;
            }
            if k == p {
                lower = core::mem::replace(&mut current, next);
            } else {
                current = next;
            }
        }
        if p == 0 {
            lower = current.clone();
        }

        let dtau = if derivative {
            let pf = p as f64;
            (0..current.len())
                .map(|j| {
                    let mut d = 0.0;
                    let left = knots[j + p] - knots[j];
                    if left > 0.0 {
                        d += pf * lower[j] / left;
                    }
                    let right = knots[j + p + 1] - knots[j + 1];
                    if right > 0.0 {
                        d -= pf * lower[j + 1] / right;
                    }
                    d
                })
                .collect()
        } else {
            Vec::new()
        };
        RawEval {
            values: current,
            dtau,
        }
    }
}

struct RawEval {
    values: Vec<f64>,
    dtau: Vec<f64>,
}

/// Index `i` of the non-degenerate span `[ξ_i, ξ_{i+1}]` holding `tau`.
fn find_span(knots: &[f64], tau: f64, side: Side) -> usize {
    let spans = knots.len() - 1;
    let nondegenerate = |i: usize| knots[i + 1] > knots[i];
    let first = (0..spans).find(|&i| nondegenerate(i)).unwrap_or(0);
    let last = (0..spans).rev().find(|&i| nondegenerate(i)).unwrap_or(0);
    let side = if tau >= knots[spans] {
        Side::Left
    } else if tau <= knots[0] {
        Side::Right
    } else {
        side
    };
    match side {
        Side::Right => (0..spans)
            .rev()
            .find(|&i| nondegenerate(i) && knots[i] <= tau)
            .unwrap_or(first),
        Side::Left => (0..spans)
            .find(|&i| nondegenerate(i) && knots[i + 1] >= tau)
            .unwrap_or(last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn basis(p: usize, k: usize, d: f64) -> SplineBasis {
        SplineBasis::uniform(p, k, d).unwrap()
    }

    #[test]
    fn knot_vector_matches_formula() {
        let b = SplineBasis::new(2, &[0.5], &[0.5], 0.7).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.35, 0.7, 0.7, 0.85, 1.0, 1.0, 1.0];
        assert_eq!(b.knot_vector().knots().len(), expected.len());
        for (a, e) in b.knot_vector().knots().iter().zip(expected) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
        }
        assert_eq!(b.raw_count(), 7);
        assert_eq!(b.dof_count(), 6);

        let b = basis(1, 0, 0.5);
        assert_eq!(b.knot_vector().knots(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
        assert_eq!(b.raw_count(), 3);
        assert_eq!(b.dof_count(), 2);

        let b = SplineBasis::new(3, &[0.25, 0.5, 0.75], &[0.25, 0.5, 0.75], 0.5).unwrap();
        assert_eq!(b.raw_count(), 13);
        assert_eq!(b.dof_count(), 12);
        assert_eq!(b.knot_vector().knots().len(), 3 * 3 + 2 * 3 + 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            SplineBasis::uniform(0, 1, 0.5),
            Err(Error::InvalidDegree(0))
        );
        assert_eq!(
            SplineBasis::uniform(2, 1, 0.0),
            Err(Error::InvalidDuty(0.0))
        );
        assert_eq!(
            SplineBasis::uniform(2, 1, 1.0),
            Err(Error::InvalidDuty(1.0))
        );
        assert!(matches!(
            SplineBasis::new(2, &[0.6, 0.4], &[0.2, 0.4], 0.5),
            Err(Error::InvalidRefinement {
                which: "alphas",
                ..
            })
        ));
        assert!(matches!(
            SplineBasis::new(2, &[0.4], &[1.0], 0.5),
            Err(Error::InvalidRefinement { which: "betas", .. })
        ));
        assert!(matches!(
            SplineBasis::new(2, &[0.4], &[0.2, 0.3], 0.5),
            Err(Error::InvalidRefinement { which: "betas", .. })
        ));
    }

    #[test]
    fn hat_functions() {
        let b = basis(1, 0, 0.5);
        let v = b.eval(0.25, 0.5);
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-15);
        let dv = b.eval_dtau(0.25, 0.5);
        assert_abs_diff_eq!(dv[0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dv[1], 2.0, epsilon = 1e-14);
        for d in [0.2, 0.5, 0.8] {
            let dd = b.eval_dduty(d, d);
            assert_eq!(dd, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn endpoints_are_the_wrap_function() {
        for (p, k) in [(1, 0), (1, 1), (2, 1), (3, 3)] {
            let b = basis(p, k, 0.3);
            let at0 = b.eval(0.0, 0.3);
            let at1 = b.eval(1.0, 0.3);
            assert_eq!(at0, at1);
            assert_eq!(at0[0], 1.0);
            assert!(at0[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn partition_of_unity_sample() {
        let b = SplineBasis::new(2, &[0.5], &[0.5], 0.7).unwrap();
        let s: f64 = b.eval(0.37, 0.7).iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partition_of_unity_dense() {
        for (p, k) in [(1, 0), (1, 1), (2, 1), (3, 3)] {
            for d in [0.1, 0.5, 0.9] {
                let b = basis(p, k, d);
                for i in 0..=1000 {
                    let tau = i as f64 / 1000.0;
                    let v = b.eval(tau, d);
                    let s: f64 = v.iter().sum();
                    assert!((s - 1.0).abs() <= 1e-12, "p={p} K={k} d={d} tau={tau}");
                    assert!(v.iter().all(|&x| x >= -1e-14));
                    let ds: f64 = b.eval_dtau(tau, d).iter().sum();
                    assert!(ds.abs() <= 1e-9, "dtau sum {ds}");
                    let dd: f64 = b.eval_dduty(tau, d).iter().sum();
                    assert!(dd.abs() <= 1e-9, "dduty sum {dd}");
                }
            }
        }
    }

    #[test]
    fn c0_break_at_duty() {
        for (p, k) in [(1, 1), (2, 1), (3, 3)] {
            let d = 0.45;
            let b = basis(p, k, d);
            let left = b.eval_sided(d, d, Side::Left);
            let right = b.eval_sided(d, d, Side::Right);
            for (l, r) in left.iter().zip(&right) {
                assert!((l - r).abs() <= 1e-12);
            }
            let dl = b.eval_dtau_sided(d, d, Side::Left);
            let dr = b.eval_dtau_sided(d, d, Side::Right);
            let jump = dl
                .iter()
                .zip(&dr)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(jump > 1e-3, "p={p}: derivative should jump at the break");
        }
    }

    #[test]
    fn smooth_at_simple_knots() {
        // C^{p-1} across α₁d for p = 2: values and first derivatives agree.
        let d = 0.6;
        let b = basis(2, 1, d);
        let knot = 0.5 * d;
        let dl = b.eval_dtau_sided(knot, d, Side::Left);
        let dr = b.eval_dtau_sided(knot, d, Side::Right);
        for (a, c) in dl.iter().zip(&dr) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn dtau_matches_central_difference() {
        let d = 0.7;
        let b = SplineBasis::new(2, &[0.5], &[0.5], d).unwrap();
        let (tau, h) = (0.1, 1e-7);
        let plus = b.eval(tau + h, d);
        let minus = b.eval(tau - h, d);
        let an = b.eval_dtau(tau, d);
        for k in 0..an.len() {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((fd - an[k]).abs() <= 1e-5, "k={k}: {fd} vs {}", an[k]);
        }
    }

    #[test]
    fn dduty_matches_central_difference() {
        let b = SplineBasis::new(2, &[0.5], &[0.5], 0.6).unwrap();
        let (tau, d, h) = (0.3, 0.6, 1e-6);
        let plus = b.eval(tau, d + h);
        let minus = b.eval(tau, d - h);
        let an = b.eval_dduty(tau, d);
        for k in 0..an.len() {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((fd - an[k]).abs() <= 1e-4, "k={k}: {fd} vs {}", an[k]);
        }
    }

    proptest! {
        #[test]
        fn derivatives_agree_with_finite_differences(
            tau in 0.01f64..0.99,
            d in 0.05f64..0.95,
            setting in 0usize..3,
        ) {
            let (p, k) = [(1, 1), (2, 1), (3, 3)][setting];
            let b = basis(p, k, d);
            // stay clear of knots, where one-sided derivatives differ
            let knots = b.knots_at(d);
            prop_assume!(knots.iter().all(|&x| (x - tau).abs() > 1e-4));
            let h = 1e-7;
            let an = b.eval_dtau(tau, d);
            let (pl, mi) = (b.eval(tau + h, d), b.eval(tau - h, d));
            for i in 0..an.len() {
                prop_assert!(((pl[i] - mi[i]) / (2.0 * h) - an[i]).abs() <= 1e-5);
            }
            prop_assume!((tau - d).abs() > 1e-4);
            let h = 1e-6;
            let an = b.eval_dduty(tau, d);
            let (pl, mi) = (b.eval(tau, d + h), b.eval(tau, d - h));
            for i in 0..an.len() {
                prop_assert!(((pl[i] - mi[i]) / (2.0 * h) - an[i]).abs() <= 1e-4);
            }
        }
    }
}
