//! End-to-end checks of the `tinet` binary: exit codes, JSON stdout,
//! artifact layout, and rerun determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tinet"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// Fresh scratch directory, unique per call so parallel tests never collide.
fn scratch(tag: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let id = COUNTER.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!(
        "tinet-cli-{tag}-{}-{id}",
        std::process::id()
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

/// Copy of the bundled spec with one textual patch applied.
fn patched_spec(dir: &Path, needle: &str, replacement: &str) -> PathBuf {
    let text = fs::read_to_string(fixture("single_mode.json")).expect("fixture readable");
    assert!(text.contains(needle), "fixture no longer contains {needle:?}");
    let path = dir.join("patched.json");
    fs::write(&path, text.replace(needle, replacement)).expect("write patched spec");
    path
}

#[test]
fn validate_clean_spec_exits_zero() {
    let out = run(&["validate", fixture("single_mode.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["clean"], Value::Bool(true));
    assert_eq!(v["violations"].as_array().map(Vec::len), Some(0));
}

#[test]
fn validate_names_offending_block() {
    let dir = scratch("validate-bad");
    let spec = patched_spec(
        &dir,
        "\"theta1\": [[0.0, 1.0], [-1.0, 0.0]]",
        "\"theta1\": [[1.0, 0.0], [0.0, 1.0]]",
    );
    let out = run(&["validate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["clean"], Value::Bool(false));
    let subjects: Vec<&str> = v["violations"]
        .as_array()
        .expect("violations array")
        .iter()
        .map(|e| e["subject"].as_str().unwrap())
        .collect();
    assert!(subjects.contains(&"theta1"), "subjects: {subjects:?}");
}

#[test]
fn validate_rejects_malformed_json() {
    let dir = scratch("validate-parse");
    let path = dir.join("truncated.json");
    fs::write(&path, "{ \"dims\": ").unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], Value::String("invalidSpec".into()));
}

#[test]
fn finite_cost_matches_oracle() {
    let spec = fixture("single_mode.json");
    let cost = run(&["cost", spec.to_str().unwrap(), "--N", "8"]);
    let oracle = run(&["oracle", spec.to_str().unwrap(), "--N", "8"]);
    assert_eq!(cost.status.code(), Some(0));
    assert_eq!(oracle.status.code(), Some(0));
    let c = stdout_json(&cost);
    let o = stdout_json(&oracle);
    assert_eq!(c["kind"], Value::String("finiteRing".into()));
    assert_eq!(c["N"], serde_json::json!(8));
    assert_eq!(o["N"], serde_json::json!(8));
    let gap = (c["value"].as_f64().unwrap() - o["value"].as_f64().unwrap()).abs();
    assert!(gap <= 1e-8, "cost vs oracle gap {gap:.3e}");
    assert!(o["routeGap"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn thermo_cost_stdout_is_deterministic() {
    let spec = fixture("single_mode.json");
    let first = run(&["cost", spec.to_str().unwrap(), "--thermo"]);
    let second = run(&["cost", spec.to_str().unwrap(), "--thermo"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout, "reruns must be byte-identical");
    let v = stdout_json(&first);
    assert_eq!(v["kind"], Value::String("thermodynamic".into()));
    assert!(v["value"].as_f64().unwrap().is_finite());
}

#[test]
fn synthesize_writes_trace_and_controller() {
    let spec = fixture("single_mode.json");
    let config = fixture("descent.json");
    let dir_a = scratch("synth-a");
    let out = run(&[
        "synthesize",
        spec.to_str().unwrap(),
        config.to_str().unwrap(),
        "--out",
        dir_a.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["termination"], Value::String("converged".into()));
    let iterations = v["iterations"].as_u64().expect("iteration count");

    let trace = fs::read_to_string(dir_a.join("trace.csv")).expect("trace.csv");
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("iteration,cost,gradNorm,step,margin"));
    assert_eq!(lines.count() as u64, iterations + 1, "one row per visited point");

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], Value::String("synthesize".into()));
    assert!(manifest["inputPath"]
        .as_str()
        .unwrap()
        .ends_with("single_mode.json"));
    assert!(!manifest["toolVersion"].as_str().unwrap().is_empty());
    let paths: Vec<&str> = manifest["outputPaths"]
        .as_array()
        .expect("outputPaths array")
        .iter()
        .map(|p| p.as_str().unwrap())
        .collect();
    for name in ["controller.json", "trace.csv"] {
        assert!(
            paths.iter().any(|p| p.ends_with(name)),
            "{name} missing from {paths:?}"
        );
    }

    let dir_b = scratch("synth-b");
    let rerun = run(&[
        "synthesize",
        spec.to_str().unwrap(),
        config.to_str().unwrap(),
        "--out",
        dir_b.to_str().unwrap(),
    ]);
    assert_eq!(rerun.status.code(), Some(0));
    for name in ["controller.json", "trace.csv"] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }
}

#[test]
fn synthesize_flags_unfinished_descent() {
    let dir = scratch("synth-short");
    let config = dir.join("one_step.json");
    fs::write(&config, "{ \"maxIters\": 1 }").unwrap();
    let out = run(&[
        "synthesize",
        fixture("single_mode.json").to_str().unwrap(),
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["termination"], Value::String("maxIterations".into()));
    assert!(dir.join("trace.csv").exists(), "trace still written on domain failure");
}

#[test]
fn gradcheck_reports_small_error() {
    let spec = fixture("single_mode.json");
    let out = run(&["gradcheck", spec.to_str().unwrap(), "--h", "1e-5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let worst = v["maxRelError"].as_f64().expect("maxRelError");
    assert!(worst <= 1e-6, "finite differences disagree: {worst:.3e}");
    assert_eq!(v["blocks"].as_array().map(Vec::len), Some(3));
}

#[test]
fn stability_flags_unstable_spec() {
    let dir = scratch("stability-bad");
    let spec = patched_spec(
        &dir,
        "[[0.06, -0.01], [-0.01, 0.02]]",
        "[[0.0, 10.0], [10.0, 0.0]]",
    );
    let out = run(&["stability", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], Value::String("notStabilizing".into()));
    assert!(v["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_refuses_undersized_ring() {
    let out = run(&["oracle", fixture("single_mode.json").to_str().unwrap(), "--N", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], Value::String("ringTooSmall".into()));
}
