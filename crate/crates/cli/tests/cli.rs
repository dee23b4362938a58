use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn curvebif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvebif")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(curvebif(&[]).status.code(), Some(1));
    assert_eq!(curvebif(&["eig", "--bogus"]).status.code(), Some(1));
    assert_eq!(curvebif(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(curvebif(&["solve", "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(curvebif(&["eig", "--problem", "/nonexistent/spec.json"]).status.code(), Some(1));
    assert_eq!(curvebif(&["eig", "--problem", "{not json"]).status.code(), Some(1));
    assert_eq!(curvebif(&["--help"]).status.code(), Some(0));
}

#[test]
fn eig_reports_eigenvalue_and_mesh() {
    let v = json(&curvebif(&["eig", "--weight", "jump", "--a", "1", "--b", "2", "--z", "0.4"]));
    assert!((v["lambda0"].as_f64().unwrap() - 5.49374731640923).abs() < 1e-9);
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    assert!(v["mesh_size"].as_u64().unwrap() > 10);
}

#[test]
fn solve_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    for (file, threads) in [(&a, "1"), (&b, "4")] {
        let out = curvebif(&["solve", "--lambda", "4", "--threads", threads, "--out", file]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    let sol = &v["solutions"][0];
    assert_eq!(sol["kind"], "regular");
    assert!(sol["residual"].as_f64().unwrap() <= 1e-5);
    let row = sol["mesh"][0].as_array().unwrap();
    assert_eq!(row.len(), 3);
    assert_eq!(row[2].as_f64().unwrap(), 0.0);
}

#[test]
fn branch_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, svg) = (path(dir.path(), "d.csv"), path(dir.path(), "d.svg"));
    let args = ["branch", "--seed", "lambda0", "--f", "smoothed", "--s-max", "2", "--out", &csv, "--svg", &svg];
    let summary = json(&curvebif(&args));
    assert_eq!(summary["branches"][0]["origin"], "from_lambda0");
    let first = std::fs::read_to_string(&csv).unwrap();
    assert!(first.starts_with("lambda,sup_norm,kind\n"));
    assert!(first.lines().count() > 10);
    let picture = std::fs::read_to_string(&svg).unwrap();
    assert!(picture.starts_with("<svg") && !picture.contains("href"));
    json(&curvebif(&args));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), first);
}

#[test]
fn flags_beat_config_file_beat_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"z": 0.5, "b": 3.0}"#).unwrap();
    let l0 = |args: &[&str]| json(&curvebif(args))["lambda0"].as_f64().unwrap();
    let eig = |z: f64, b: f64| {
        let w = curvebif::Weight::piecewise_constant(z, 1.0, b).unwrap();
        curvebif::eigen::principal_neumann(&w).unwrap().eigenvalue
    };
    assert_eq!(l0(&["eig"]), eig(0.4, 2.0));
    assert_eq!(l0(&["eig", "--config", &cfg]), eig(0.5, 3.0));
    assert_eq!(l0(&["eig", "--config", &cfg, "--z", "0.3"]), eig(0.3, 3.0));
    std::fs::write(&cfg, r#"{"zz": 0.5}"#).unwrap();
    assert_eq!(curvebif(&["eig", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn inline_problem_spec_is_accepted() {
    let spec = r#"{"lambda": 50.0, "weight": {"z": 0.4, "segments": [
        {"start": 0.0, "end": 0.4, "form": "constant", "value": 1.0},
        {"start": 0.4, "end": 1.0, "form": "constant", "value": -2.0}]},
        "f": {"kind": "prototype", "p": 1.0, "q": 0.5, "M": 1.0}}"#;
    let v = json(&curvebif(&["singular", "--problem", spec]));
    assert_eq!(v["outcome"], "found");
    assert_eq!(v["kind"], "singular");
    assert!(v["jump"].as_f64().unwrap() > 0.0);
    assert!(v["residual"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn classify_power_law_is_regular_by_criterion() {
    let v = json(&curvebif(&["classify", "--weight", "power", "--alpha", "1", "--beta", "1", "--lambda", "50"]));
    assert_eq!(v["tag"], "RegularByCriterion");
    assert_eq!(v["i_left"]["kind"], "infinite");
    let v = json(&curvebif(&["classify", "--lambda", "50"]));
    assert_eq!(v["tag"], "JumpCertified");
    assert_eq!(v["traced"], true);
    assert!(v["witness"].is_object());
}

#[test]
fn minimize_and_rates_emit_reports() {
    let v = json(&curvebif(&["minimize", "--f", "smoothed", "--m", "0.1", "--lambda", "11", "--n", "64", "--starts", "2"]));
    assert!(v["value"].as_f64().unwrap() < 0.0);
    assert_eq!(v["values"].as_array().unwrap().len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let svg = path(dir.path(), "r.svg");
    let v = json(&curvebif(&["rates", "--small", "--p", "2", "--ladder", "100,1000,10000,100000", "--svg", &svg]));
    assert_eq!(v["check"], "pass");
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<path"));
    assert_eq!(curvebif(&["rates", "--ladder", "100,10"]).status.code(), Some(1));
}

#[test]
fn thread_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_curvebif")).env("CURVEBIF_THREADS", "1").args(["eig"]).output().unwrap();
    json(&out);
}

#[test]
fn verify_reports_every_criterion() {
    let out = curvebif(&["verify"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 11, "{text}");
    let red = text.lines().any(|l| l.starts_with("criterion") && l.contains("FAIL"));
    assert_eq!(out.status.code(), Some(if red { 2 } else { 0 }));
}
