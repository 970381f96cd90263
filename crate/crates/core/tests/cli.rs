use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polycbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycbf"))
        .args(args)
        .env_remove("POLYCBF_SCENARIO_DIR")
        .output()
        .unwrap()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn json_stderr(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_prints_builtins() {
    let out = polycbf(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), polycbf::BUILTIN_NAMES);
}

#[test]
fn simulate_l_shape_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let svg = dir.path().join("traj.svg");
    let out = polycbf(&["simulate", "l-shape", "--out", path_str(&csv), "--svg", path_str(&svg)]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json_stdout(&out);
    assert_eq!(summary["termination"], "goal");
    assert!(summary["min_h"].as_f64().unwrap() >= -1e-3);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,p_x,p_y,"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("a{k}.csv"));
        let svg = dir.path().join(format!("a{k}.svg"));
        let out = polycbf(&["simulate", "revolving-door", "--out", path_str(&csv), "--svg", path_str(&svg)]);
        assert!(out.status.success());
        files.push((std::fs::read(csv).unwrap(), std::fs::read(svg).unwrap(), out.stdout));
    }
    assert!(files[0] == files[1]);
}

#[test]
fn simulate_overrides_and_all_starts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let out = polycbf(&[
        "simulate",
        "l-shape",
        "--all-starts",
        "--kappa",
        "8",
        "--dt",
        "0.02",
        "--out",
        path_str(&csv),
    ]);
    assert!(out.status.success());
    let runs = json_stdout(&out);
    let runs = runs.as_array().unwrap();
    assert_eq!(runs.len(), 6);
    for (k, run) in runs.iter().enumerate() {
        assert_eq!(run["termination"], "goal");
        assert!(dir.path().join(format!("run-{k}.csv")).exists());
    }

    let out = polycbf(&["simulate", "l-shape", "--start", "-2,5.5", "--goal", "3,3.5", "--t-end", "2"]);
    assert!(out.status.success());
    let summary = json_stdout(&out);
    assert_eq!(summary["start"], serde_json::json!([-2.0, 5.5]));
    assert_eq!(summary["goal"], serde_json::json!([3.0, 3.5]));
    assert_eq!(summary["final_time"], 2.0);
}

#[test]
fn pyramid_stops_above_goal() {
    let out = polycbf(&["simulate", "pyramid"]);
    assert!(out.status.success());
    let summary = json_stdout(&out);
    let end: Vec<f64> = summary["final_position"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((end[0] - 3.0).hypot(end[1] - 0.4) <= 0.05);
    assert!(end[2] > 0.25);
}

#[test]
fn unsafe_start_exits_with_validation_code() {
    let out = polycbf(&["simulate", "l-shape", "--start", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = json_stderr(&out);
    assert_eq!(err["error"], "unsafe_start");
}

#[test]
fn bad_inputs_exit_with_validation_code() {
    for args in [
        &["simulate", "nowhere"][..],
        &["simulate", "l-shape", "--kappa", "-1"],
        &["simulate", "l-shape", "--start", "1,2,3"],
        &["simulate", "l-shape", "--start", "a,b"],
        &["field", "l-shape", "--resolution", "1"],
        &["simulate"],
        &["verify", "everything"],
    ] {
        let out = polycbf(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(json_stderr(&out)["message"].is_string());
    }
}

#[test]
fn malformed_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&polycbf::builtin("l-shape").unwrap().to_json()).unwrap();
    doc["regions"][2] = serde_json::json!([9]);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = polycbf(&["simulate", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = json_stderr(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("regions[2]"), "{msg}");
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let out = polycbf(&["simulate", "l-shape", "--t-end", "0.1", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json_stderr(&out)["error"], "io");
}

#[test]
fn scenario_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = polycbf(&["export", "crossroad", "--out", path_str(&dir.path().join("mine.json"))]);
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_polycbf"))
        .args(["simulate", "mine", "--t-end", "0.5"])
        .env("POLYCBF_SCENARIO_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_stdout(&out)["scenario"], "crossroad");
}

#[test]
fn field_changes_sign_at_the_corner_wall() {
    let out = polycbf(&["field", "convex-corner", "--lower", "0,4", "--upper", "4,5", "--resolution", "41"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,psi,h");
    for line in lines.take(41) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (x, psi, h) = (cols[0], cols[2], cols[3]);
        assert_eq!(psi < 0.0, x < 2.0, "x = {x}");
        assert!(h <= psi);
    }
}

#[test]
fn field_of_moving_door_depends_on_time() {
    let a = polycbf(&["field", "revolving-door", "--resolution", "30", "--t", "0"]);
    let b = polycbf(&["field", "revolving-door", "--resolution", "30", "--t", "3"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn field_with_provable_buffer_under_approximates() {
    let out = polycbf(&["field", "l-shape", "--buffer", &5f64.ln().to_string(), "--resolution", "80"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[3] <= cols[2]);
    }
}

#[test]
fn verify_suites_pass() {
    let out = polycbf(&["verify", "hull", "--scenario", "revolving-door"]);
    assert_eq!(out.status.code(), Some(0));
    let reports = json_stdout(&out);
    assert_eq!(reports[0]["name"], "hull-containment/revolving-door");
    assert_eq!(reports[0]["passed"], true);
    assert_eq!(reports[0]["seed"], 1);

    let out = polycbf(&["verify", "gradients", "--n", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_stdout(&out).as_array().unwrap().len(), polycbf::BUILTIN_NAMES.len());

    let out = polycbf(&["verify", "qp", "--n", "2000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_is_deterministic_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = polycbf(&["verify", "sandwich", "--n", "5000", "--seed", "3", "--out", path_str(p)]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn failed_audit_exits_with_code_three() {
    // A very sharp corner sampled only within a few 1/kappa of the tie
    // defeats the fixed finite-difference step.
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&polycbf::builtin("convex-corner").unwrap().to_json()).unwrap();
    doc["cbf"]["kappa"] = serde_json::json!(1.0e4);
    doc["sim"]["x0"] = serde_json::json!([2.0001, 2.0001]);
    doc["controller"]["goal"] = serde_json::json!([2.0003, 2.0002]);
    doc["alternative_starts"] = serde_json::json!([]);
    let path = dir.path().join("sharp.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = polycbf(&["verify", "gradients", "--scenario", path_str(&path), "--n", "200"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_stdout(&out)[0]["passed"], false);
    assert_eq!(json_stderr(&out)["error"], "audit_failed");
}

#[test]
fn export_round_trips() {
    let out = polycbf(&["export", "pyramid"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let back = polycbf::Scenario::from_json(&text).unwrap();
    assert_eq!(back, polycbf::builtin("pyramid").unwrap());
}
