//! Relative L2 error between two waveforms on a uniform midpoint grid.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Midpoints of `samples_per_cycle` equal cells per switching period `ts`
/// covering `window`.
pub fn midpoint_grid(window: (f64, f64), samples_per_cycle: usize, ts: f64) -> Result<Vec<f64>> {
    let (a, b) = window;
    let len = b - a;
    if !(len > 0.0) {
        return Err(Error::InvalidParameter {
            name: "window",
            value: len,
            reason: "must have positive length",
        });
    }
    if samples_per_cycle == 0 || !(ts > 0.0) {
        return Err(Error::InvalidParameter {
            name: "samples_per_cycle",
            value: samples_per_cycle as f64,
            reason: "needs at least one sample per positive period",
        });
    }
    let cycles = libm::round(len / ts).max(1.0) as usize;
    let m = cycles * samples_per_cycle;
    let h = len / m as f64;
    Ok((0..m).map(|i| a + (i as f64 + 0.5) * h).collect())
}

/// `‖r − y‖₂ / ‖r‖₂` over paired samples.
pub fn relative_l2(reference: &[f64], test: &[f64]) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: test.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (r, y) in reference.iter().zip(test) {
        num += (r - y) * (r - y);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::ZeroReferenceNorm);
    }
    Ok(libm::sqrt(num / den))
}

/// Relative L2 error of one state component over `window`, with both
/// trajectories interpolated linearly onto the midpoint grid.
pub fn l2_relative_error(
    reference: &Trajectory,
    test: &Trajectory,
    component: usize,
    window: (f64, f64),
    samples_per_cycle: usize,
    ts: f64,
) -> Result<f64> {
    let grid = midpoint_grid(window, samples_per_cycle, ts)?;
    let r = grid
        .iter()
        .map(|&t| reference.interpolate_linear(t, component))
        .collect::<Result<Vec<_>>>()?;
    let y = grid
        .iter()
        .map(|&t| test.interpolate_linear(t, component))
        .collect::<Result<Vec<_>>>()?;
    relative_l2(&r, &y)
}
