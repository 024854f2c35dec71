use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn toscert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toscert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn linear_certificate_for_builtin_set() {
    let out = toscert(&[
        "certify",
        "--benchmark",
        "d",
        "--mode",
        "linear",
        "--alpha",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let cert: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rho2 = cert["rho2"].as_f64().unwrap();
    assert!(rho2 > 0.0 && rho2 < 1.0, "{cert}");
    assert_eq!(cert["mode"], "linear");
}

#[test]
fn closed_form_residual_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "req.json",
        r#"{"mode": "sublinearResidual", "lambda": 0.5,
            "classes": {"f": {"m": 0, "L": "inf"}, "g": {"m": 0, "L": "inf"}, "h": {"m": 0, "L": 2}}}"#,
    );
    let out = toscert(&["certify", "--input", &input]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert: Value = serde_json::from_slice(&out.stdout).unwrap();
    // (2 − λ)³λ / (2L²) at λ = 1/2, L = 2
    let theta = cert["theta"].as_f64().unwrap();
    assert!((theta - 3.375 * 0.5 / 8.0).abs() < 1e-14);
    assert_eq!(cert["provenance"], "symbolic");
}

#[test]
fn certificate_file_round_trips_through_reaudit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let out = toscert(&[
        "certify",
        "--benchmark",
        "e",
        "--mode",
        "linear",
        "--alpha",
        "0.02",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let top = toscert::cli::reaudit(&path).unwrap();
    assert!(top <= 1e-8, "{top}");
}

#[test]
fn missing_strong_convexity_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "req.json",
        r#"{"mode": "linear", "alpha": 0.1,
            "classes": {"f": {"m": 0, "L": "inf"}, "g": {"m": 0, "L": 10}, "h": {"m": 0, "L": 20}}}"#,
    );
    let out = toscert(&["certify", "--input", &input]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["exit_code"], 3);
    assert!(err["message"]
        .as_str()
        .unwrap()
        .contains("strong convexity"));
}

#[test]
fn malformed_json_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", "{\"mode\": ");
    let out = toscert(&["certify", "--input", &input]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["exit_code"], 4);
}

#[test]
fn unknown_field_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "req.json",
        r#"{"benchmark": "d", "alhpa": 0.1}"#,
    );
    let out = toscert(&["certify", "--input", &input, "--mode", "linear"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_subcommand_is_exit_2() {
    let out = toscert(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn sweep_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = toscert(&[
        "sweep",
        "--benchmark",
        "a",
        "--mode",
        "linear",
        "--grid",
        "1e-2:1:5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6, "{text}");
    assert!(lines[0].starts_with("alpha"));
}

#[test]
fn run_writes_trace_and_reaches_known_solution() {
    let dir = tempfile::tempdir().unwrap();
    // min ½‖x − (2, −3)‖² over the unit box: x⋆ = (1, −1).
    let input = write(
        dir.path(),
        "prob.json",
        r#"{"f": {"type": "box", "radius": 1}, "g": {"type": "zero"},
            "h": {"p": [[1, 0], [0, 1]], "q": [-2, 3]},
            "z0": [0, 0], "alpha": 1, "lambda": 1, "max_iter": 50}"#,
    );
    let csv = dir.path().join("trace.csv");
    let out = toscert(&[
        "run",
        "--input",
        &input,
        "--reference-iter",
        "500",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<&str> = last.split(',').collect();
    let residual: f64 = cols[1].parse().unwrap();
    assert!(residual < 1e-20, "{last}");
    let objective: f64 = cols[4].parse().unwrap();
    assert!((objective - (-4.0)).abs() < 1e-9, "{last}");
}

#[test]
fn selftest_passes() {
    let out = toscert(&["selftest", "--samples", "60"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn demo_lqr_writes_one_csv_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let out = toscert(&[
        "demo-lqr",
        "--states",
        "4",
        "--inputs",
        "2",
        "--horizon",
        "5",
        "--max-iter",
        "30",
        "--lambda",
        "0.5,1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("lambda_0.5.csv").exists());
    assert!(dir.path().join("lambda_1.csv").exists());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.as_array().map(|a| a.len()), Some(2), "{summary}");
}

#[test]
fn bad_lambda_in_demo_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = toscert(&[
        "demo-lqr",
        "--lambda",
        "2.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr_json(&out)["message"].is_string());
}
