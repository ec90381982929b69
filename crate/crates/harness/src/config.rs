//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` describes the inverter test case with
//! the lowest-order basis. Unknown fields are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use mpde_core::{
    BuckParameters, DutyCycleProfile, InitMode, LinearCircuit, PwmExcitation, SolverConfig,
    SplineBasis,
};
use serde::{Deserialize, Serialize};

use crate::Error;

/// What an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Envelope solve only.
    Mpde,
    /// Event-located reference solve only.
    Reference,
    /// Oracle, reference and envelope solve side by side.
    Compare,
    /// [`Compare`](Self::Compare) over a list of tolerances.
    Sweep,
}

impl ExperimentKind {
    /// Name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Self::Mpde => "mpde",
            Self::Reference => "reference",
            Self::Compare => "compare",
            Self::Sweep => "sweep",
        }
    }
}

/// Buck converter element values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    /// Inductance in H.
    pub inductance: f64,
    /// Capacitance in F.
    pub capacitance: f64,
    /// Coil resistance in Ω.
    pub coil_resistance: f64,
    /// Load resistance in Ω.
    pub load_resistance: f64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        let p = BuckParameters::default();
        Self {
            inductance: p.inductance,
            capacitance: p.capacitance,
            coil_resistance: p.coil_resistance,
            load_resistance: p.load_resistance,
        }
    }
}

/// PWM source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationConfig {
    /// Peak voltage in V.
    pub peak_voltage: f64,
    /// Switching frequency in Hz.
    pub switching_frequency: f64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            peak_voltage: 350.0,
            switching_frequency: 5000.0,
        }
    }
}

/// Duty-cycle profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DutyConfig {
    /// Fixed duty cycle.
    Constant {
        /// Duty cycle in (0, 1).
        value: f64,
    },
    /// Duty cycle producing a sinusoidal average output.
    Sinusoidal {
        /// Desired peak of the averaged output in V.
        desired_peak: f64,
        /// Output frequency in Hz.
        frequency: f64,
    },
}

impl Default for DutyConfig {
    fn default() -> Self {
        Self::Sinusoidal {
            desired_peak: 325.0,
            frequency: 50.0,
        }
    }
}

/// Spline basis of the ripple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    /// Degree `p`.
    pub degree: usize,
    /// Refinement count `K`; ignored when `alphas`/`betas` are given.
    pub refinement: usize,
    /// Explicit refinement abscissae left of the break.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Explicit refinement abscissae right of the break.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            degree: 1,
            refinement: 1,
            alphas: None,
            betas: None,
        }
    }
}

/// Tolerances and step limits of one solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Absolute tolerance.
    pub abstol: f64,
    /// Relative tolerance.
    pub reltol: f64,
    /// Highest BDF order, 1 or 2.
    #[serde(default = "default_order")]
    pub max_order: usize,
    /// Step size limit in s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    /// First step size in s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
}

fn default_order() -> usize {
    2
}

impl SolverSettings {
    /// `abstol = reltol = tol`, order 2.
    pub fn tolerance(tol: f64) -> Self {
        Self {
            abstol: tol,
            reltol: tol,
            max_order: 2,
            max_step: None,
            initial_step: None,
        }
    }

    /// Same limits with `abstol = reltol = tol`.
    pub fn with_tolerance(self, tol: f64) -> Self {
        Self {
            abstol: tol,
            reltol: tol,
            ..self
        }
    }

    /// Solver configuration for the core crate.
    pub fn to_solver(&self) -> SolverConfig {
        SolverConfig {
            abstol: self.abstol,
            reltol: self.reltol,
            max_order: self.max_order,
            max_step: self.max_step,
            initial_step: self.initial_step,
            adaptive: true,
        }
    }
}

/// Initialization of the envelope coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitConfig {
    /// Shifted periodic steady state.
    #[default]
    SteadyShift,
    /// Flat ripple at the initial state.
    Zero,
}

impl From<InitConfig> for InitMode {
    fn from(c: InitConfig) -> Self {
        match c {
            InitConfig::SteadyShift => InitMode::SteadyShift,
            InitConfig::Zero => InitMode::Zero,
        }
    }
}

/// Where results go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory for CSV and JSON files; created if missing.
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
        }
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Experiment kind; when given it must match the subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    /// Circuit element values.
    pub circuit: CircuitConfig,
    /// PWM source.
    pub excitation: ExcitationConfig,
    /// Duty-cycle profile.
    pub duty: DutyConfig,
    /// Ripple basis.
    pub basis: BasisConfig,
    /// Settings of the envelope solve.
    pub mpde_solver: SolverSettings,
    /// Settings of the reference solve at working accuracy.
    pub reference_solver: SolverSettings,
    /// Simulated interval in s.
    pub t_span: [f64; 2],
    /// Error and output samples per switching period.
    pub samples_per_cycle: usize,
    /// Envelope initialization.
    pub init: InitConfig,
    /// Tolerances of a sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Vec<f64>>,
    /// Output location.
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::setting(1).expect("setting 1 exists")
    }
}

impl ExperimentConfig {
    /// Inverter test case with one of the three published basis settings:
    /// 1 is `p=1, K=1`, 2 is `p=2, K=1`, 3 is `p=3, K=3`, each with its
    /// envelope and reference tolerances.
    pub fn setting(n: usize) -> Option<Self> {
        let (degree, refinement, mpde_tol, reference_tol) = match n {
            1 => (1, 1, 1e-3, 1e-2),
            2 => (2, 1, 1e-4, 1e-4),
            3 => (3, 3, 1e-7, 1e-6),
            _ => return None,
        };
        Some(Self {
            kind: None,
            circuit: CircuitConfig::default(),
            excitation: ExcitationConfig::default(),
            duty: DutyConfig::default(),
            basis: BasisConfig {
                degree,
                refinement,
                alphas: None,
                betas: None,
            },
            mpde_solver: SolverSettings::tolerance(mpde_tol),
            reference_solver: SolverSettings::tolerance(reference_tol),
            t_span: [0.0, 0.08],
            samples_per_cycle: 100,
            init: InitConfig::SteadyShift,
            tolerances: None,
            output: OutputConfig::default(),
        })
    }

    /// Parses a JSON document.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and parses a JSON file.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Checks everything that does not need a solve.
    pub fn validate(&self) -> Result<(), Error> {
        let [t0, t1] = self.t_span;
        if !(t1 - t0 > 0.0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::Config(format!(
                "t_span [{t0}, {t1}] must have positive length"
            )));
        }
        if self.samples_per_cycle == 0 {
            return Err(Error::Config("samples_per_cycle must be positive".into()));
        }
        for (name, s) in [
            ("mpde_solver", &self.mpde_solver),
            ("reference_solver", &self.reference_solver),
        ] {
            s.to_solver()
                .validate()
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        if let Some(tols) = &self.tolerances {
            if tols.iter().any(|&t| !(t > 0.0)) {
                return Err(Error::Config("tolerances must be positive".into()));
            }
        }
        self.circuit()?;
        self.excitation()?;
        self.basis()?;
        Ok(())
    }

    /// Fails unless `kind` is unset or equal to `expected`.
    pub fn expect_kind(&self, expected: ExperimentKind) -> Result<(), Error> {
        match self.kind {
            Some(k) if k != expected => Err(Error::Config(format!(
                "config is for a {} experiment, not {}",
                k.name(),
                expected.name()
            ))),
            _ => Ok(()),
        }
    }

    /// Simulated interval.
    pub fn span(&self) -> (f64, f64) {
        (self.t_span[0], self.t_span[1])
    }

    /// Buck converter from the element values.
    pub fn circuit(&self) -> Result<LinearCircuit, Error> {
        let c = &self.circuit;
        Ok(LinearCircuit::buck(BuckParameters {
            inductance: c.inductance,
            capacitance: c.capacitance,
            coil_resistance: c.coil_resistance,
            load_resistance: c.load_resistance,
        })?)
    }

    /// PWM source with its duty profile.
    pub fn excitation(&self) -> Result<PwmExcitation, Error> {
        let e = &self.excitation;
        let duty = match self.duty {
            DutyConfig::Constant { value } => DutyCycleProfile::constant(value)?,
            DutyConfig::Sinusoidal {
                desired_peak,
                frequency,
            } => DutyCycleProfile::sinusoidal(desired_peak, e.peak_voltage, frequency)?,
        };
        Ok(PwmExcitation::new(
            e.peak_voltage,
            e.switching_frequency,
            duty,
        )?)
    }

    /// Spline basis, built at the duty cycle of the start time.
    pub fn basis(&self) -> Result<SplineBasis, Error> {
        let b = &self.basis;
        let d = self.excitation()?.duty().value(self.t_span[0]);
        let basis = match (&b.alphas, &b.betas) {
            (None, None) => SplineBasis::uniform(b.degree, b.refinement, d)?,
            (Some(a), Some(c)) => SplineBasis::new(b.degree, a, c, d)?,
            _ => {
                return Err(Error::Config(
                    "alphas and betas must be given together".into(),
                ))
            }
        };
        Ok(basis)
    }

    /// Creates the output directory and checks that it is writable.
    pub fn prepare_output(&self) -> Result<PathBuf, Error> {
        let dir = &self.output.directory;
        let io = |e: std::io::Error| Error::Io {
            path: dir.clone(),
            message: e.to_string(),
        };
        fs::create_dir_all(dir).map_err(io)?;
        let probe = dir.join(".write-test");
        fs::write(&probe, b"").map_err(io)?;
        fs::remove_file(&probe).map_err(io)?;
        Ok(dir.clone())
    }
}
