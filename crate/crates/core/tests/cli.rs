mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdetect"))
        .args(args)
        .env("QDETECT_LOG", "off")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn solve_worked_example() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.json", &common::worked_example_json());
    let out = qdetect(&["solve", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let pd = v["p_correct"].as_f64().unwrap();
    assert!((pd - (0.45 + 0.15 * 5f64.sqrt())).abs() < 1e-6);
    assert_eq!(v["verdict"], "optimal");
    assert!(v["X_hat"].is_array());

    let text = qdetect(&["solve", &input]);
    assert_eq!(text.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&text.stdout).contains("0.785"));
}

#[test]
fn solve_orthogonal_pair_and_binary_oracle() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "o.json",
        r#"{"dim": 2, "states": [
            {"prior": 0.3, "vector": [[1, 0], [0, 0]]},
            {"prior": 0.7, "vector": [[0, 0], [0, 1]]}
        ]}"#,
    );
    let out = qdetect(&["solve", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["p_correct"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let oracle = v["oracle"]["helstrom_p_correct"].as_f64().unwrap();
    assert!((oracle - 1.0).abs() < 1e-12);
}

#[test]
fn verify_solution_and_reject_uniform() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.json", &common::worked_example_json());
    let report = p(dir.path(), "report.json");
    let out = qdetect(&["solve", &input, "--format", "json", "--output", &report]);
    assert_eq!(out.status.code(), Some(0));

    let verified = qdetect(&[
        "verify", &input, &report, "--x-hat", &report, "--check-tol", "1e-2", "--format", "json",
    ]);
    assert_eq!(verified.status.code(), Some(0), "{}", String::from_utf8_lossy(&verified.stdout));
    assert_eq!(json(&verified)["verdict"], "optimal");

    let third = "[[0.3333333333333333, 0], [0, 0]]";
    let uniform = format!(
        r#"{{"operators": [
            [{third}, [[0, 0], [0.3333333333333333, 0]]],
            [{third}, [[0, 0], [0.3333333333333333, 0]]],
            [{third}, [[0, 0], [0.3333333333333334, 0]]]
        ]}}"#
    );
    let meas = write(&dir, "u.json", &uniform);
    let rejected = qdetect(&["verify", &input, &meas, "--x-hat", &report, "--format", "json"]);
    assert_eq!(rejected.status.code(), Some(2));
    assert_eq!(json(&rejected)["verdict"], "not_optimal");
}

#[test]
fn malformed_inputs_exit_three() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.json", &common::worked_example_json());
    let short = write(
        &dir,
        "m.json",
        r#"{"operators": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}"#,
    );
    let out = qdetect(&["verify", &input, &short, "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["error"]["message"].is_string());

    let bad = write(&dir, "bad.json", r#"{"dim": 2, "states": []"#);
    assert_eq!(qdetect(&["solve", &bad]).status.code(), Some(3));
    assert_eq!(qdetect(&["solve", "/nonexistent/file.json"]).status.code(), Some(3));
    assert_eq!(qdetect(&["solve", &input, "--gap-tol", "-1"]).status.code(), Some(3));
    assert_eq!(qdetect(&["frobnicate"]).status.code(), Some(3));
}

#[test]
fn compare_reports_both_measurements() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.json", &common::worked_example_json());
    let out = qdetect(&["compare", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let opt = v["optimal_p_correct"].as_f64().unwrap();
    let lsm = v["lsm_p_correct"].as_f64().unwrap();
    assert!((lsm - 0.712665).abs() < 1e-5);
    assert!(lsm < opt);
    assert_eq!(v["plot"]["weighted_states"].as_array().unwrap().len(), 3);
}

#[test]
fn generate_is_deterministic_and_solvable() {
    let dir = TempDir::new().unwrap();
    let args = ["generate", "--kind", "mixed", "-n", "3", "-m", "4", "--seed", "11"];
    let a = qdetect(&args);
    let b = qdetect(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = qdetect(&["generate", "--kind", "mixed", "-n", "3", "-m", "4", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);

    let path = write(&dir, "g.json", &String::from_utf8(a.stdout).unwrap());
    let out = qdetect(&["solve", &path, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "optimal");
}
