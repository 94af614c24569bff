//! Integration tests for the command-line front end.

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_chaplygin");

const SCENARIO: &str = r#"
n = 3
t_end = 0.5
dt = 0.01
form = "omega_tilde"
seed = 7

[inertia]
kind = "principal3"
values = [1.0, 1.5, 2.0]

[initial]
s0 = [0.1, -0.2, 0.3]
u0 = [0.5, 0.2, -0.4]
"#;

fn write_scenario(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_is_bit_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), SCENARIO);
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out = tmp.path().join(sub);
        let status = Command::new(BIN)
            .args(["run"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((
            std::fs::read(out.join("trajectory.csv")).unwrap(),
            std::fs::read(out.join("report.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "trajectory files differ");
    assert_eq!(outputs[0].1, outputs[1].1, "report files differ");
}

#[test]
fn run_honors_output_env_var() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), SCENARIO);
    let out = tmp.path().join("from-env");
    let status = Command::new(BIN)
        .args(["run"])
        .arg(&scenario)
        .env("CHAPLYGIN_OUT", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("trajectory.csv").is_file());
    assert!(out.join("report.json").is_file());
}

#[test]
fn run_rejects_malformed_toml_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "n = ]");
    let out = Command::new(BIN).args(["run"]).arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: parse:"), "stderr: {err}");
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");
}

#[test]
fn run_rejects_invalid_inertia_with_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SCENARIO.replace("[1.0, 1.5, 2.0]", "[1.0, -1.5, 2.0]");
    let scenario = write_scenario(tmp.path(), &bad);
    let out = Command::new(BIN).args(["run"]).arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: validation:"), "stderr: {err}");
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");
}

#[test]
fn run_trips_guard_with_exit_4_on_coarse_step() {
    let tmp = tempfile::tempdir().unwrap();
    let coarse = SCENARIO
        .replace("dt = 0.01", "dt = 0.5")
        .replace("t_end = 0.5", "t_end = 10.0")
        .replace("u0 = [0.5, 0.2, -0.4]", "u0 = [3.0, -2.5, 2.0]");
    let scenario = write_scenario(tmp.path(), &coarse);
    let out = Command::new(BIN).args(["run"]).arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: guard:"), "stderr: {err}");
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");
}

#[test]
fn verify_unknown_suite_exits_2() {
    let out = Command::new(BIN).args(["verify", "no-such-suite"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown suite"), "stderr: {err}");
}

#[test]
fn verify_algebra_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["verify", "algebra", "--n", "3,4", "--seed", "1", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS jacobi-n3")));
    assert!(stdout.contains("suite algebra"));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("suite_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["suite"], "algebra");
    assert!(report["checks"].as_array().unwrap().len() >= 15);
}

#[test]
fn corrupted_structure_constants_fail_jacobi() {
    // A deliberately corrupted structure tensor must be caught by name.
    let report = chaplygin::verify::run_suite_corrupted(&[3], 0).unwrap();
    assert!(!report.passed());
    let jacobi = report
        .checks
        .iter()
        .find(|c| c.name == "jacobi-n3")
        .expect("jacobi check present");
    assert!(!jacobi.pass);
    assert!(jacobi.residual > 1e-6);
}
