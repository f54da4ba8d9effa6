use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn viscowell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viscowell")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"kernel\": ").unwrap();
    let out = viscowell(&["constants", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, r#"{"kernel": {"type": "exponential_sum", "terms": []}, "bogus": 1}"#).unwrap();
    assert_eq!(viscowell(&["classify", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(viscowell(&["constants", "--preset", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(viscowell(&["constants"]).status.code(), Some(2));
}

#[test]
fn zero_preset_completes_with_exact_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = viscowell(&["simulate", "--preset", "zero", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["stop"], "Completed");
    assert_eq!(summary["max_residual"], 0.0);
    assert!(dir.path().join("checkpoint.bin").exists());
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,quad_energy,total_energy,memory_norm,dissipation,I0,grad_norm,damp_power\n"));
}

#[test]
fn simulation_output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(viscowell(&["simulate", "--preset", "single-cubic", "--out", d.path().to_str().unwrap()]).status.success());
    }
    for f in ["trace.csv", "checkpoint.bin", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn empty_sweep_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = viscowell(&["sweep", "--preset", "amplitude-sweep", "--axis", "amplitude=", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = viscowell(&["sweep", "--preset", "amplitude-sweep", "--axis", "amplitude=1:2:0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_point_sweep_matches_simulate_and_classify() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_dir = dir.path().join("sweep");
    let sim_dir = dir.path().join("sim");
    let sweep = viscowell(&["sweep", "--preset", "well-invariance", "--axis", "amplitude=1.0", "--jobs", "1", "--out", sweep_dir.to_str().unwrap()]);
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    assert!(viscowell(&["simulate", "--preset", "well-invariance", "--out", sim_dir.to_str().unwrap()]).status.success());
    let classify = viscowell(&["classify", "--preset", "well-invariance"]);
    assert!(classify.status.success());
    let classify: Value = serde_json::from_slice(&classify.stdout).unwrap();

    let point = read_json(&sweep_dir.join("point_000.json"));
    assert_eq!(point["summary"], read_json(&sim_dir.join("summary.json")));
    assert_eq!(point["prediction"], classify["prediction"]);
    assert_eq!(point["point"]["agreement"], "match");

    let csv = fs::read_to_string(sweep_dir.join("aggregate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().next().unwrap().starts_with("index,amplitude,e0"));
}

#[test]
fn fit_reads_a_written_trace() {
    let dir = tempfile::tempdir().unwrap();
    assert!(viscowell(&["simulate", "--preset", "decay-m1-expkernel", "--out", dir.path().to_str().unwrap()]).status.success());
    let trace = dir.path().join("trace.csv");
    let out = viscowell(&["fit", "--trace", trace.to_str().unwrap(), "--model", "exponential", "--window", "2:10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(fit["rate"].as_f64().unwrap() > 0.0);
    assert_eq!(viscowell(&["fit", "--trace", "/nonexistent.csv"]).status.code(), Some(2));
}
