use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mpde_harness::config::{ExperimentConfig, ExperimentKind};
use mpde_harness::experiment::{self, Oracle};
use mpde_harness::io::{write_json, write_sweep_csv, write_waveform_csv, Waveform};
use mpde_harness::report::StatsReport;
use mpde_harness::Error;
use serde_json::json;

/// Multirate envelope simulation of PWM-driven converters.
#[derive(Parser)]
#[command(name = "mpde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Envelope solve; writes mpde.csv and mpde.json.
    SimulateMpde {
        /// JSON experiment configuration.
        config: PathBuf,
    },
    /// Event-located reference solve; writes reference.csv and reference.json.
    SimulateReference {
        /// JSON experiment configuration.
        config: PathBuf,
    },
    /// Oracle, reference and envelope solves with errors; writes report.json
    /// and the three waveforms.
    Compare {
        /// JSON experiment configuration.
        config: PathBuf,
    },
    /// Comparison per tolerance; writes sweep.csv and sweep.json.
    Sweep {
        /// JSON experiment configuration.
        config: PathBuf,
        /// Comma-separated tolerances; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        tols: Option<Vec<f64>>,
    },
    /// Duty-dependence checks of the Galerkin matrices.
    #[command(name = "verify-theorem1")]
    VerifyDutyDependence {
        /// Spline degree p.
        #[arg(long)]
        degree: usize,
        /// Refinement count K.
        #[arg(long)]
        refine: usize,
    },
}

fn load(path: &Path, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.expect_kind(kind)?;
    cfg.validate()?;
    Ok(cfg)
}

fn print(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    // a closed pipe (`| head`) is not an error of the run
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn oracle_waveform(oracle: &Oracle, labels: &[String]) -> Waveform {
    Waveform {
        labels: labels.to_vec(),
        times: oracle.grid().to_vec(),
        values: oracle
            .current()
            .iter()
            .zip(oracle.voltage())
            .map(|(&i, &v)| vec![i, v])
            .collect(),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SimulateMpde { config } => {
            let cfg = load(&config, ExperimentKind::Mpde)?;
            let dir = cfg.prepare_output()?;
            let run = experiment::run_mpde(&cfg)?;
            let csv = dir.join("mpde.csv");
            write_waveform_csv(&csv, &run.waveform(cfg.samples_per_cycle)?)?;
            let summary = json!({
                "kind": "mpde",
                "config": cfg,
                "stats": StatsReport::from(run.stats),
                "wall_clock_s": run.wall_clock_s,
                "csv": csv,
            });
            write_json(&dir.join("mpde.json"), &summary)?;
            print(&summary);
        }
        Command::SimulateReference { config } => {
            let cfg = load(&config, ExperimentKind::Reference)?;
            let dir = cfg.prepare_output()?;
            let run = experiment::run_reference(&cfg)?;
            let csv = dir.join("reference.csv");
            write_waveform_csv(&csv, &run.waveform())?;
            let summary = json!({
                "kind": "reference",
                "config": cfg,
                "stats": StatsReport::from(run.stats),
                "wall_clock_s": run.wall_clock_s,
                "csv": csv,
            });
            write_json(&dir.join("reference.json"), &summary)?;
            print(&summary);
        }
        Command::Compare { config } => {
            let cfg = load(&config, ExperimentKind::Compare)?;
            let dir = cfg.prepare_output()?;
            let oracle = Oracle::compute(&cfg)?;
            let report = experiment::run_comparison(&cfg, &oracle)?;
            let mpde = experiment::run_mpde(&cfg)?;
            write_waveform_csv(
                &dir.join("mpde.csv"),
                &mpde.waveform(cfg.samples_per_cycle)?,
            )?;
            let reference = experiment::run_reference(&cfg)?;
            write_waveform_csv(&dir.join("reference.csv"), &reference.waveform())?;
            write_waveform_csv(
                &dir.join("oracle.csv"),
                &oracle_waveform(&oracle, &reference.labels),
            )?;
            write_json(&dir.join("report.json"), &report)?;
            print(&serde_json::to_value(&report).expect("reports serialize"));
        }
        Command::Sweep { config, tols } => {
            let cfg = load(&config, ExperimentKind::Sweep)?;
            let tols = tols.or_else(|| cfg.tolerances.clone()).ok_or_else(|| {
                Error::Config("no tolerances: pass --tols or set tolerances".into())
            })?;
            let dir = cfg.prepare_output()?;
            let oracle = Oracle::compute(&cfg)?;
            let rows = experiment::sweep_tolerances(&cfg, &tols, &oracle)?;
            write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
            let summary = json!({ "kind": "sweep", "config": cfg, "rows": rows });
            write_json(&dir.join("sweep.json"), &summary)?;
            print(&summary);
        }
        Command::VerifyDutyDependence { degree, refine } => {
            let report = experiment::verify_duty_dependence(degree, refine)?;
            print(&serde_json::to_value(&report).expect("reports serialize"));
            if !report.passed {
                return Err(Error::Config(format!(
                    "duty-dependence check failed for p={degree}, K={refine}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "code": e.code(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
