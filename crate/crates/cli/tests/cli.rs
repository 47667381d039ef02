use std::path::{Path, PathBuf};
use std::process::Command;

use orbit_locator_cli::run_with;
use serde_json::Value;
use tempfile::TempDir;

const DIAG: &str = "[[[1,0],[0,0]],[[0,0],[0,1]]]";

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("orbit-locator").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn project_on_axis_orbit() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "c0.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[1,0]}}"#));
    let v = run_json(&["project", p(&f)]);
    assert_eq!(v["rank"], 1);
    let pm: Vec<Vec<f64>> = serde_json::from_value(v["P"].clone()).unwrap();
    let want = [[1.0, 0.0], [0.0, 0.0]];
    for (row, w) in pm.iter().zip(want) {
        for (a, b) in row.iter().zip(w) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
    for entry in v["trace"].as_array().unwrap() {
        let d = entry["d_pipeline"].as_f64().unwrap();
        let o = entry["d_oracle"].as_f64().unwrap();
        assert!((d - o).abs() <= 1e-5);
    }
}

#[test]
fn distance_to_full_orbit_is_zero() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "id.json", r#"{"dim":2,"basis":[[[1,0],[0,1]]],"x":[0.6,0.8],"y":[0.6,0.8]}"#);
    let v = run_json(&["distance", p(&f)]);
    assert_eq!(v["verdict"]["kind"], "Stabilized");
    assert!(v["verdict"]["d"].as_f64().unwrap().abs() <= 1e-6);
    assert!(v["exact_distance"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn parallel_distance_matches_sequential() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "d.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[1,0.25],"y":[0.3,-2]}}"#));
    let (_, a, _) = run(&["distance", p(&f)]);
    let (_, b, _) = run(&["distance", "--parallel", p(&f)]);
    assert_eq!(a, b);
}

#[test]
fn flags_override_file_settings() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "d.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[1,0],"y":[0,1],"tol":1e-3,"budget":5}}"#));
    let v = run_json(&["distance", p(&f)]);
    assert_eq!(v["tol"].as_f64(), Some(1e-3));
    assert_eq!(v["budget"], 5);
    let v = run_json(&["--tol", "1e-4", "distance", p(&f), "--budget", "7"]);
    assert_eq!(v["tol"].as_f64(), Some(1e-4));
    assert_eq!(v["budget"], 7);
}

#[test]
fn demo_zero_row_is_at_distance_one() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("demo.csv");
    let (code, out, _) = run(&["demo", "--c", "0,0.5", "--csv", p(&csv)]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "c,r,N,d,levels,verdict");
    let zero: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(zero[2], "NA");
    assert!((zero[3].parse::<f64>().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(zero[5], "refused/Stabilized");
}

#[test]
fn balldist_needs_scale() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "b.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[1,1],"y":[3,0]}}"#));
    assert_eq!(run(&["balldist", p(&f)]).0, 1);
    let v = run_json(&["balldist", p(&f), "--n", "2"]);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn omt_reports_smallest_singular_value() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "t.json", r#"{"dim":2,"basis":[[[3,0],[0,0.5]]],"x":[1,0]}"#);
    let v = run_json(&["--validate", "omt", p(&f)]);
    assert!((v["sigma_min"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert!((v["r"].as_f64().unwrap() - 0.5).abs() <= 1e-5);
}

#[test]
fn validate_accepts_every_json_command() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "v.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[1,0.5],"y":[1.3,-0.7],"n":1}}"#));
    for args in [
        vec!["distance", p(&f)],
        vec!["balldist", p(&f)],
        vec!["project", p(&f)],
        vec!["radius", p(&f)],
        vec!["decompose", p(&f), "--r", "1.5"],
    ] {
        let mut full = vec!["--validate"];
        full.extend(args.iter());
        let (code, _, err) = run(&full);
        assert_eq!(code, 0, "{args:?}: {err}");
    }
}

#[test]
fn input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"dim\": 2, \"basis\": [");
    let (code, out, err) = run(&["distance", p(&bad)]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert_eq!(err.lines().count(), 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["distance", "/nonexistent/problem.json"]).0, 1);
    let no_y = write(&dir, "noy.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[1,0]}}"#));
    assert_eq!(run(&["distance", p(&no_y)]).0, 1);
    let dep = write(&dir, "dep.json", r#"{"dim":2,"basis":[[[1,0],[0,1]],[[2,0],[0,2]]],"x":[1,0]}"#);
    assert_eq!(run(&["radius", p(&dep)]).0, 1);
}

#[test]
fn refusals_exit_two() {
    let dir = TempDir::new().unwrap();
    let zero = write(&dir, "zero.json", &format!(r#"{{"dim":2,"basis":{DIAG},"x":[0,0],"y":[0,1]}}"#));
    assert_eq!(run(&["radius", p(&zero)]).0, 2);
    assert_eq!(run(&["project", p(&zero)]).0, 2);
    let v = run_json(&["project", p(&zero), "--nested-fallback"]);
    assert_eq!(v["distance"]["method"], "nested_limit");
    assert!((v["distance"]["verdict"]["d"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("distance"));
}

#[test]
fn binary_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "r.json", r#"{"dim":3,"basis":[[[1,2,0],[0,1,0],[0,0,1]],[[0,0,1],[1,0,0],[0,1,0]]],"x":[1,0.5,-0.25],"y":[0.2,1,2]}"#);
    let bin = env!("CARGO_BIN_EXE_orbit-locator");
    let go = |threads: &str, cmd: &str| {
        let out = Command::new(bin)
            .args([cmd, p(&f)])
            .env("ORBIT_LOCATOR_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    for cmd in ["distance", "project", "radius"] {
        assert_eq!(go("1", cmd), go("4", cmd), "{cmd}");
    }
    let out = Command::new(bin).args(["radius", p(&f)]).env("ORBIT_LOCATOR_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
