//! End-to-end tests against the compiled binary.

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const RUNNING: &str = r#"{
  "beta": "ln(2)",
  "energies": [0, 1, 2],
  "probabilities": ["1/2", "3/10", "1/5"]
}"#;

const TWO_LEVEL: &str = r#"{
  "beta": "ln(2)",
  "energies": [0, 1],
  "probabilities": [1, 0],
  "G": 12
}"#;

fn write_spec(dir: &TempDir, name: &str, content: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

fn thermoflux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoflux"))
        .args(args)
        .env_remove("THERMOFLUX_MAX_MICROSTATES")
        .output()
        .unwrap()
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn curve_on_a_gibbs_spec_is_the_diagonal() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "gibbs.json",
        r#"{"beta": "ln(2)", "energies": [0, 1, 2], "probabilities": ["4/7", "2/7", "1/7"]}"#,
    );
    let out = thermoflux(&["curve", "--spec", &spec]);
    let csv = stdout_of(&out);
    assert_eq!(csv, "width,height\n0,0\n1,4/7\n3/2,6/7\n7/4,1\n");
}

#[test]
fn curve_formats_json_and_svg() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    let json = stdout_of(&thermoflux(&["curve", "--spec", &spec, "--format", "json"]));
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["concave"], Value::Bool(true));
    assert_eq!(v["breakpoints"][0][0], Value::from("0"));
    let svg = stdout_of(&thermoflux(&["curve", "--spec", &spec, "--format", "svg"]));
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
}

#[test]
fn bound_reports_the_worked_value() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    let out = stdout_of(&thermoflux(&["bound", "--spec", &spec, "--epsilon", "0.1"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["factor"], Value::from("62/63"));
    assert_eq!(v["mode"], Value::from("exact"));
    let value = v["value"].as_str().unwrap();
    assert!(value.starts_with("2.308"), "value {value}");
}

#[test]
fn ratio_defaults_to_the_bound() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    let out = stdout_of(&thermoflux(&["ratio", "--spec", &spec, "--epsilon", "1/10"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["ratio"], Value::from("9/10"));
    assert_eq!(v["forward"], Value::from("9/10"));
    assert_eq!(v["reverse"]["probability"], Value::from("1"));
    assert_eq!(v["reverse"]["feasible"], Value::Bool(true));
    assert_eq!(v["work"]["source"], Value::from("epsilon-work-bound"));
}

#[test]
fn simulate_reports_the_two_level_currents() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "two_level.json", TWO_LEVEL);
    let out = stdout_of(&thermoflux(&["simulate", "--spec", &spec]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["currents"]["matrix"][0][0], Value::from("8"));
    assert_eq!(v["currents"]["matrix"][0][1], Value::from("4"));
    assert_eq!(v["work"]["factor"], Value::from("2/3"));
    assert_eq!(v["distribution"]["success_mass"], Value::from("1"));
    assert_eq!(v["final_state"][0], Value::from("2/3"));
    assert_eq!(v["final_state"][1], Value::from("1/3"));
}

#[test]
fn exact_work_values_snap_to_rational_factors() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    let out = stdout_of(&thermoflux(&[
        "ratio", "--spec", &spec, "--epsilon", "1/10", "--w", "1/2",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["work"]["snapped"], Value::Bool(true));
    assert_eq!(v["work"]["requested"], Value::from("1/2"));
    let factor = v["work"]["factor"].as_str().unwrap();
    assert!(factor.contains('/'), "factor {factor}");
}

#[test]
fn malformed_specs_exit_two() {
    let dir = TempDir::new().unwrap();
    let garbage = write_spec(&dir, "bad.json", "{not json");
    assert_eq!(thermoflux(&["curve", "--spec", &garbage]).status.code(), Some(2));

    let unknown = write_spec(
        &dir,
        "unknown.json",
        r#"{"beta": "ln(2)", "energies": [0], "probabilities": ["1"], "extra": 1}"#,
    );
    assert_eq!(thermoflux(&["curve", "--spec", &unknown]).status.code(), Some(2));

    let unbalanced = write_spec(
        &dir,
        "mass.json",
        r#"{"beta": "ln(2)", "energies": [0, 1], "probabilities": ["1/2", "1/3"]}"#,
    );
    assert_eq!(
        thermoflux(&["entropy", "--spec", &unbalanced]).status.code(),
        Some(2)
    );

    assert_eq!(
        thermoflux(&["curve", "--spec", dir.path().join("absent.json").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let exact_with_floats = write_spec(
        &dir,
        "floats.json",
        r#"{"beta": "ln(2)", "energies": [0, 1], "probabilities": [0.5, 0.5],
            "mode": "exact"}"#,
    );
    assert_eq!(
        thermoflux(&["entropy", "--spec", &exact_with_floats]).status.code(),
        Some(2)
    );
}

#[test]
fn infeasible_simulation_exits_three() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "pure.json",
        r#"{"beta": "ln(2)", "energies": [0, 1], "probabilities": [1, 0]}"#,
    );
    let out = thermoflux(&["simulate", "--spec", &spec, "--w", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn float_mode_runs_the_same_commands() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "float.json",
        r#"{"beta": 0.6931471805599453, "energies": [0, 1, 2],
            "probabilities": [0.5, 0.3, 0.2]}"#,
    );
    let out = stdout_of(&thermoflux(&["bound", "--spec", &spec, "--epsilon", "0.1"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mode"], Value::from("float"));
    let factor: f64 = v["factor"].as_str().unwrap().parse().unwrap();
    assert!((factor - 62.0 / 63.0).abs() < 1e-12, "factor {factor}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    let a = stdout_of(&thermoflux(&["simulate", "--spec", &spec, "--epsilon", "1/2"]));
    let b = stdout_of(&thermoflux(&["simulate", "--spec", &spec, "--epsilon", "1/2"]));
    assert_eq!(a, b);
    let v1 = stdout_of(&thermoflux(&["verify", "--instances", "2", "--seed", "5"]));
    let v2 = stdout_of(&thermoflux(&["verify", "--instances", "2", "--seed", "5"]));
    assert_eq!(v1, v2);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    let stdout = stdout_of(&thermoflux(&["curve", "--spec", &spec]));
    let path = dir.path().join("curve.csv");
    let out = thermoflux(&["curve", "--spec", &spec, "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap(), stdout);
}

#[test]
fn verify_exits_zero_and_round_trips_its_specs() {
    let dir = TempDir::new().unwrap();
    let out = thermoflux(&["verify", "--instances", "3", "--seed", "7"]);
    let report = stdout_of(&out);
    let v: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["violations"], Value::from(0u64));
    assert_eq!(v["verified_instances"], Value::from(3u64));
    for (i, result) in v["results"].as_array().unwrap().iter().enumerate() {
        assert_eq!(result["ok"], Value::Bool(true));
        let spec_text = serde_json::to_string(&result["spec"]).unwrap();
        let path = write_spec(&dir, &format!("echo_{i}.json"), &spec_text);
        let echoed = thermoflux(&["entropy", "--spec", &path]);
        assert!(
            echoed.status.success(),
            "echoed spec {i} rejected: {}",
            String::from_utf8_lossy(&echoed.stderr)
        );
    }
}

#[test]
fn verify_float_mode_exits_zero() {
    let out = thermoflux(&["verify", "--instances", "3", "--seed", "7", "--mode", "float"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["mode"], Value::from("float"));
    assert_eq!(v["violations"], Value::from(0u64));
}

#[test]
fn microstate_cap_refusals_exit_three() {
    let out = Command::new(env!("CARGO_BIN_EXE_thermoflux"))
        .args(["verify", "--instances", "2", "--seed", "5"])
        .env("THERMOFLUX_MAX_MICROSTATES", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn flags_reject_out_of_range_values() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "running.json", RUNNING);
    assert_eq!(
        thermoflux(&["bound", "--spec", &spec, "--epsilon", "3/2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        thermoflux(&["ratio", "--spec", &spec, "--delta", "-1/10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        thermoflux(&["entropy", "--spec", &spec, "--format", "csv"]).status.code(),
        Some(2)
    );
}
