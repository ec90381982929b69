//! Linear descriptor circuits `A·x' + B·x = c(t)` driven by a bipolar PWM
//! source, plus the duty-cycle profiles that modulate it.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

/// Linear circuit `A·x' + B·x = b_in·v(t)`, `x(0) = x0`, with a single PWM
/// source `v(t)` coupled into the states through `b_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCircuit {
    a: Matrix,
    b: Matrix,
    input: Vector,
    x0: Vector,
    labels: Vec<String>,
}

impl LinearCircuit {
    /// Generic constructor. `a` and `b` must be square of equal size, and
    /// `input`, `x0`, `labels` must match that size.
    pub fn new(
        a: Matrix,
        b: Matrix,
        input: Vector,
        x0: Vector,
        labels: Vec<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        for got in [
            a.ncols(),
            b.nrows(),
            b.ncols(),
            input.len(),
            x0.len(),
            labels.len(),
        ] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        Ok(Self {
            a,
            b,
            input,
            x0,
            labels,
        })
    }

    /// Buck converter / single-phase inverter with states `(i_L, v_C)`:
    ///
    /// ```text
    /// [L 0; 0 C]·x' + [R_L 1; −1 1/R]·x = [v(t); 0]
    /// ```
    ///
    /// starting uncharged.
    pub fn buck(params: BuckParameters) -> Result<Self> {
        let l = positive("inductance", params.inductance)?;
        let c = positive("capacitance", params.capacitance)?;
        let rl = positive("coil_resistance", params.coil_resistance)?;
        let r = positive("load_resistance", params.load_resistance)?;
        Self::new(
            Matrix::from_row_slice(2, 2, &[l, 0.0, 0.0, c]),
            Matrix::from_row_slice(2, 2, &[rl, 1.0, -1.0, 1.0 / r]),
            Vector::from_vec(vec![1.0, 0.0]),
            Vector::zeros(2),
            vec!["i_L".to_string(), "v_C".to_string()],
        )
    }

    /// Matrix multiplying `x'`.
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// Matrix multiplying `x`.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Coupling of the PWM source into each state equation.
    pub fn input(&self) -> &Vector {
        &self.input
    }

    /// Initial state.
    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    /// Replaces the initial state.
    pub fn with_x0(mut self, x0: Vector) -> Result<Self> {
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x0.len(),
            });
        }
        self.x0 = x0;
        Ok(self)
    }

    /// State names, e.g. `i_L`, `v_C`.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of states.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Component values of the buck/inverter circuit, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuckParameters {
    /// Coil inductance `L` in H.
    pub inductance: f64,
    /// Capacitance `C` in F.
    pub capacitance: f64,
    /// Coil series resistance `R_L` in Ω.
    pub coil_resistance: f64,
    /// Load resistance `R` in Ω.
    pub load_resistance: f64,
}

impl Default for BuckParameters {
    /// 4 mH, 10 µF, 10 mΩ, 20 Ω.
    fn default() -> Self {
        Self {
            inductance: 4e-3,
            capacitance: 10e-6,
            coil_resistance: 10e-3,
            load_resistance: 20.0,
        }
    }
}

/// Duty cycle as a function of (slow) time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DutyCycleProfile {
    /// Fixed duty cycle.
    Constant(f64),
    /// `d(t) = ½·(m·sin(2π f t) + 1)` with modulation index `m = V̂_C / v̂`.
    Sinusoidal {
        /// Modulation index `m ∈ [0, 1)`.
        modulation: f64,
        /// Output (AC) frequency in Hz.
        frequency: f64,
    },
}

impl DutyCycleProfile {
    /// Constant duty in (0, 1).
    pub fn constant(duty: f64) -> Result<Self> {
        if duty > 0.0 && duty < 1.0 {
            Ok(Self::Constant(duty))
        } else {
            Err(Error::InvalidDuty(duty))
        }
    }

    /// Sinusoidal duty producing an output of peak `desired_peak` from a
    /// source of peak `source_peak` at frequency `frequency`.
    ///
    /// Fails if `desired_peak ≥ source_peak`, which would push the duty
    /// cycle out of (0, 1).
    pub fn sinusoidal(desired_peak: f64, source_peak: f64, frequency: f64) -> Result<Self> {
        let source_peak = positive("source_peak", source_peak)?;
        let frequency = positive("ac_frequency", frequency)?;
        if !(desired_peak >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "desired_peak",
                value: desired_peak,
                reason: "must be non-negative",
            });
        }
        let modulation = desired_peak / source_peak;
        if modulation >= 1.0 {
            return Err(Error::DutyOutOfRange(modulation));
        }
        Ok(Self::Sinusoidal {
            modulation,
            frequency,
        })
    }

    /// `d(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant(d) => d,
            Self::Sinusoidal {
                modulation,
                frequency,
            } => 0.5 * (modulation * libm::sin(2.0 * PI * frequency * t) + 1.0),
        }
    }

    /// `dd/dt` in 1/s.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::Sinusoidal {
                modulation,
                frequency,
            } => {
                let w = 2.0 * PI * frequency;
                0.5 * modulation * w * libm::cos(w * t)
            }
        }
    }

    /// Whether `d` is independent of time.
    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    /// Smallest and largest duty over all time.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Self::Constant(d) => (d, d),
            Self::Sinusoidal { modulation, .. } => {
                (0.5 * (1.0 - modulation), 0.5 * (1.0 + modulation))
            }
        }
    }

    /// Period of the profile, if it is periodic.
    pub fn period(&self) -> Option<f64> {
        match *self {
            Self::Constant(_) => None,
            Self::Sinusoidal { frequency, .. } => Some(1.0 / frequency),
        }
    }
}

/// Bipolar natural-sampling PWM with a trailing-edge sawtooth carrier:
/// `v(t) = v̂·sgn(d(t) − s(t))`, `s(t) = (t/Ts) mod 1`, `sgn(0) := +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwmExcitation {
    amplitude: f64,
    frequency: f64,
    duty: DutyCycleProfile,
}

impl PwmExcitation {
    /// PWM of peak `amplitude` (V) at switching frequency `frequency` (Hz).
    pub fn new(amplitude: f64, frequency: f64, duty: DutyCycleProfile) -> Result<Self> {
        Ok(Self {
            amplitude: positive("peak_voltage", amplitude)?,
            frequency: positive("switching_frequency", frequency)?,
            duty,
        })
    }

    /// Peak voltage `v̂`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Switching frequency `fs`.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Switching period `Ts = 1/fs`.
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Duty-cycle profile.
    pub fn duty(&self) -> &DutyCycleProfile {
        &self.duty
    }

    /// Sawtooth carrier `s(t) ∈ [0, 1)`.
    pub fn carrier(&self, t: f64) -> f64 {
        let x = t * self.frequency;
        let s = x - libm::floor(x);
        if s >= 1.0 {
            0.0
        } else {
            s
        }
    }

    /// Whether the switch is in the on-state at `t`.
    pub fn is_on(&self, t: f64) -> bool {
        self.carrier(t) <= self.duty.value(t)
    }

    /// Source voltage `v(t)`.
    pub fn value(&self, t: f64) -> f64 {
        if self.is_on(t) {
            self.amplitude
        } else {
            -self.amplitude
        }
    }
}
