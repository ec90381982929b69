use std::path::Path;
use std::process::{Command, Output};

use mpde_harness::io::read_waveform_csv;
use serde_json::{json, Value};

fn mpde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, kind: &str, extra: Value) -> String {
    let mut cfg = json!({
        "kind": kind,
        "basis": { "degree": 2, "refinement": 1 },
        "t_span": [0.0, 4e-3],
        "output": { "directory": dir.join("out") },
    });
    if let (Some(base), Some(extra)) = (cfg.as_object_mut(), extra.as_object()) {
        base.extend(extra.clone());
    }
    let path = dir.join(format!("{kind}.json"));
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn simulate_mpde_writes_waveform() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mpde", json!({}));
    let summary = stdout_json(&mpde(&["simulate-mpde", &cfg]));
    assert_eq!(summary["kind"], "mpde");
    assert!(summary["stats"]["accepted_steps"].as_u64().unwrap() > 0);
    let w = read_waveform_csv(&dir.path().join("out/mpde.csv")).unwrap();
    assert_eq!(w.labels, ["i_L", "v_C"]);
    assert_eq!(w.times.first(), Some(&0.0));
    assert_eq!(w.times.last(), Some(&4e-3));
    assert!(w.values[0].iter().all(|v| v.abs() <= 1e-12));
    assert!(dir.path().join("out/mpde.json").exists());
}

#[test]
fn simulate_reference_writes_solver_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reference", json!({}));
    let summary = stdout_json(&mpde(&["simulate-reference", &cfg]));
    let w = read_waveform_csv(&dir.path().join("out/reference.csv")).unwrap();
    assert_eq!(
        w.times.len() as u64,
        summary["stats"]["accepted_steps"].as_u64().unwrap() + 1
    );
    assert!(w.times.windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn compare_writes_report_and_waveforms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "compare", json!({}));
    let report = stdout_json(&mpde(&["compare", &cfg]));
    let eps = report["mpde"]["eps_v"].as_f64().unwrap();
    assert!(eps > 0.0 && eps < 1e-2, "{eps}");
    assert!(report["speedup"]["time_steps"].as_f64().unwrap() > 1.0);
    for f in ["report.json", "mpde.csv", "reference.csv", "oracle.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk["mpde"]["eps_v"], report["mpde"]["eps_v"]);
}

#[test]
fn sweep_writes_one_row_per_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep", json!({}));
    let summary = stdout_json(&mpde(&["sweep", &cfg, "--tols", "1e-2,1e-3,1e-4,1e-5"]));
    assert_eq!(summary["rows"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(text.starts_with("tol,mpde_eps_v,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn sweep_takes_tolerances_from_config_and_checks_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep", json!({ "tolerances": [1e-3, 1e-4] }));
    let err = stderr_json(&mpde(&["sweep", &cfg]));
    assert_eq!(err["error"]["code"], "config");
    let cfg = write_config(dir.path(), "sweep", json!({}));
    assert_eq!(
        stderr_json(&mpde(&["sweep", &cfg]))["error"]["code"],
        "config"
    );
}

#[test]
fn verify_subcommand_reports_and_passes() {
    let report = stdout_json(&mpde(&[
        "verify-theorem1",
        "--degree",
        "3",
        "--refine",
        "3",
    ]));
    assert_eq!(report["passed"], true);
    assert!(report["mass_fit_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn bad_inputs_fail_with_json_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let err = stderr_json(&mpde(&["simulate-mpde", missing.to_str().unwrap()]));
    assert_eq!(err["error"]["code"], "io");

    let cfg = write_config(dir.path(), "mpde", json!({ "colour": "red" }));
    let err = stderr_json(&mpde(&["simulate-mpde", &cfg]));
    assert_eq!(err["error"]["code"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("colour"));

    let cfg = write_config(dir.path(), "reference", json!({}));
    assert_eq!(
        stderr_json(&mpde(&["simulate-mpde", &cfg]))["error"]["code"],
        "config"
    );

    let cfg = write_config(
        dir.path(),
        "mpde",
        json!({ "duty": { "kind": "constant", "value": 1.5 } }),
    );
    assert!(!mpde(&["simulate-mpde", &cfg]).status.success());

    let err = stderr_json(&mpde(&[
        "verify-theorem1",
        "--degree",
        "0",
        "--refine",
        "1",
    ]));
    assert!(err["error"]["code"].is_string());
}
