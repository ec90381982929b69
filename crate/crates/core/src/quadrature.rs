//! Gauss-Legendre rules mapped onto knot spans.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Gauss-Legendre nodes and weights on the unit interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `points`-point rule (exact for polynomials of degree
    /// `2·points − 1`). Roots of the Legendre polynomial are found by Newton
    /// iteration from the Chebyshev-like initial guesses.
    pub fn new(points: usize) -> Self {
        assert!(points >= 1, "a quadrature rule needs at least one point");
        let n = points;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            // map [-1, 1] -> [0, 1]
            nodes.push(0.5 * (1.0 - x));
            weights.push(1.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Iterates over `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (a + len * x, len * w))
    }
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Per-knot-span Gauss-Legendre rule over a sorted knot vector.
///
/// Spans of zero length (repeated knots) are skipped.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    rule: GaussLegendre,
}

impl QuadratureRule {
    /// Rule with `points_per_span` points on every non-degenerate span.
    pub fn new(points_per_span: usize) -> Self {
        Self {
            rule: GaussLegendre::new(points_per_span),
        }
    }

    /// Points per span.
    pub fn points_per_span(&self) -> usize {
        self.rule.len()
    }

    /// All `(node, weight)` pairs over the knot vector, span by span.
    pub fn points<'a>(&'a self, knots: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
        knots
            .windows(2)
            .filter(|w| w[1] > w[0])
            .flat_map(move |w| self.rule.on(w[0], w[1]))
    }
}
