mod common;

use std::fs;
use std::process::{Command, Output};

use common::fixture;

fn mosaic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mosaic"))
        .args(args)
        .env_remove("MOSAIC_WORKERS")
        .output()
        .expect("binary runs")
}

fn config() -> String {
    fixture("pendulum.json").to_str().unwrap().to_string()
}

#[test]
fn verify_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("output_dir={}", dir.path().display());
    let res = mosaic(&[
        "verify",
        &config(),
        "--set",
        "horizon=2",
        "--set",
        "refinement_rounds=1",
        "--set",
        &out,
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for file in ["regions.csv", "regions.json", "heatmap.svg", "report.json"] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let csv = fs::read_to_string(dir.path().join("regions.csv")).unwrap();
    assert!(csv.starts_with("dim0_lo,dim0_hi,dim1_lo,dim1_hi,upper_bound,verdict,generation\n"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["initial_cells"], 16);
    assert_eq!(report["memory_guard"]["triggered"], false);
    let hist: f64 = report["histogram"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["volume"].as_f64().unwrap())
        .sum();
    assert!((hist - 2.8).abs() < 1e-9);
}

#[test]
fn invalid_probability_exits_with_one() {
    let res = mosaic(&["verify", &config(), "--set", "faults.p=1.5"]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.starts_with("error["), "{err}");
}

#[test]
fn unknown_keys_and_missing_files_exit_with_one() {
    assert_eq!(
        mosaic(&["verify", &config(), "--set", "colour=red"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mosaic(&["verify", "/nonexistent/config.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(mosaic(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn memory_guard_exits_with_two_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("output_dir={}", dir.path().display());
    let res = mosaic(&["verify", &config(), "--set", "max_states=20", "--set", &out]);
    assert_eq!(res.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["memory_guard"]["triggered"], true);
    assert_eq!(report["memory_guard"]["limit"], 20);
}

#[test]
fn oracle_prints_a_probability() {
    let res = mosaic(&["oracle", &config(), "--state", "-0.6,-1.0", "--k", "5"]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let p: f64 = String::from_utf8_lossy(&res.stdout).trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(
        mosaic(&["oracle", &config(), "--state", "0.1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn export_model_writes_transitions_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let tra = dir.path().join("model.tra");
    let res = mosaic(&[
        "export-model",
        &config(),
        "--out",
        tra.to_str().unwrap(),
        "--set",
        "horizon=1",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(&tra).unwrap();
    let header: Vec<usize> = text
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(header.len(), 3);
    assert_eq!(text.lines().count(), header[2] + 1);
    let lab = fs::read_to_string(dir.path().join("model.lab")).unwrap();
    assert_eq!(lab.lines().next(), Some("0=\"init\" 1=\"fail\""));
    assert_eq!(lab.lines().filter(|l| l.contains(": 0")).count(), 16);
}
