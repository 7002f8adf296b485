use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BILATERAL: &str = r#"{
  "buyers": [{"kind": "discrete", "atoms": [[1.0, 0.5], [3.0, 0.5]]}],
  "sellers": [{"kind": "discrete", "atoms": [[0.0, 0.5], [2.0, 0.5]]}],
  "edges": [[0, 0]],
  "family": {"kind": "all"}
}"#;

const NO_GAINS: &str = r#"{
  "buyers": [{"kind": "discrete", "atoms": [[1.0, 1.0]]}],
  "sellers": [{"kind": "discrete", "atoms": [[2.0, 1.0]]}],
  "edges": [[0, 0]],
  "family": {"kind": "all"}
}"#;

const UNIFORM: &str = r#"{
  "buyers": [{"kind": "uniform", "lo": 0.0, "hi": 1.0}],
  "sellers": [{"kind": "uniform", "lo": 0.0, "hi": 1.0}],
  "edges": [[0, 0]],
  "family": {"kind": "all"}
}"#;

fn gftlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gftlab")).args(args).env("GFTLAB_THREADS", "2").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let args = ["gen", "--buyers", "2", "--sellers", "3", "--atoms", "3", "--seed", "42"];
    let a = gftlab(&args);
    let b = gftlab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = gftlab(&["gen", "--buyers", "2", "--sellers", "3", "--atoms", "3", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_writes_a_max_trades_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let out = gftlab(&["gen", "--buyers", "3", "--sellers", "3", "--family", "max-trades", "--k", "2", "--seed", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["family"]["kind"], "max_trades");
    assert_eq!(v["family"]["k"], 2);
    assert_eq!(v["buyers"].as_array().unwrap().len(), 3);
}

#[test]
fn gen_rejects_zero_atoms() {
    let out = gftlab(&["gen", "--atoms", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_reports_the_bilateral_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.json", BILATERAL);
    let v = json_stdout(&gftlab(&["eval", "--instance", p.to_str().unwrap(), "--exact"]));
    let m = &v["metrics"];
    assert!(close(m["gft_star"].as_f64().unwrap(), 1.25));
    assert!(close(m["ratio"].as_f64().unwrap(), 0.8));
    assert_eq!(v["instance_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn eval_ratio_is_null_without_gains() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "z.json", NO_GAINS);
    let v = json_stdout(&gftlab(&["eval", "--instance", p.to_str().unwrap()]));
    assert_eq!(v["metrics"]["gft_star"].as_f64(), Some(0.0));
    assert!(v["metrics"]["ratio"].is_null());
}

#[test]
fn randomized_is_the_even_mix() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.json", BILATERAL);
    let v = json_stdout(&gftlab(&["eval", "--instance", p.to_str().unwrap(), "--mechanism", "randomized"]));
    let mech = &v["mechanisms"];
    for key in ["gft", "pi_sellers", "pi_buyers", "budget"] {
        let mix = 0.5 * (mech["gsom"][key].as_f64().unwrap() + mech["gbom"][key].as_f64().unwrap());
        assert!(close(mech["randomized"][key].as_f64().unwrap(), mix), "{key}");
    }
}

#[test]
fn eval_writes_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.json", BILATERAL);
    let out = gftlab(&["eval", "--instance", p.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("instance,mechanism,metric,value"));
    assert!(rows.any(|r| r.ends_with(",gsom+gbom,ratio,0.8")));
}

#[test]
fn exact_mode_needs_discrete_laws() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "u.json", UNIFORM);
    let out = gftlab(&["eval", "--instance", p.to_str().unwrap(), "--exact"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_stdout(&gftlab(&["eval", "--instance", p.to_str().unwrap(), "--mc", "2000", "--seed", "5"]));
    assert_eq!(v["mode"], "monte_carlo");
    assert!(v["standard_errors"]["gsom"]["gft"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_lambda_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.json", BILATERAL);
    let out = gftlab(&["eval", "--instance", p.to_str().unwrap(), "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = gftlab(&["eval", "--instance", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reference_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = gftlab(&["check", "--reference-suite", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reports: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(reports.as_array().unwrap().iter().all(|r| r["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true)));
}

#[test]
fn small_random_suite_passes() {
    let out = gftlab(&["check", "--random", "--count", "8", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn injected_bug_fails_with_a_witness() {
    let out = gftlab(&["check", "--reference-suite", "--inject-bug"]);
    assert_eq!(out.status.code(), Some(1));
    let reports: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&Value> = reports
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r["checks"].as_array().unwrap())
        .filter(|c| c["pass"] == false)
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["witness"]["deviation"].is_number()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn sweep_covers_each_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.json", BILATERAL);
    let v = json_stdout(&gftlab(&["sweep", "--instance", p.to_str().unwrap(), "--from", "0.25", "--to", "0.75", "--steps", "3"]));
    let lambdas: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p["lambda"].as_f64().unwrap()).collect();
    assert_eq!(lambdas, vec![0.25, 0.5, 0.75]);
    assert!(v["points"][0]["single_edge_ratio"].is_number());
}
