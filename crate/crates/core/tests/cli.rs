//! End-to-end runs of the `magneto` binary.

use std::path::Path;
use std::process::{Command, Output};

fn magneto(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magneto")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

#[test]
fn verify_larmor_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = magneto(dir.path(), &["--scenario", "larmor", "verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().filter(|l| l.starts_with("PASS")).count() >= 7);
    assert!(!table.contains("FAIL"));
}

#[test]
fn taimanov_rejects_non_oscillating_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = magneto(dir.path(), &["--scenario", "symplectic", "taimanov"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kind=not_oscillating"), "{err}");
    assert!(err.contains("reason="), "{err}");
}

#[test]
fn taimanov_writes_region_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = magneto(dir.path(), &["--scenario", "oscillating", "taimanov"]);
    assert!(out.status.success());
    for f in ["region.pbm", "region.json", "region.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("region.json")).unwrap()).unwrap();
    assert!(json["value"].as_f64().unwrap() < 0.0);
    assert!(json["seeds"].as_array().unwrap().len() >= 2);
}

#[test]
fn simulate_larmor_closes() {
    let dir = tempfile::tempdir().unwrap();
    let out = magneto(dir.path(), &["--scenario", "larmor", "simulate"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,q1,q2,v1,v2,E"));
    assert!(dir.path().join("orbit.svg").exists());
}

#[test]
fn scan_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = magneto(dir.path(), &["--scenario", "oscillating", "scan"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["scan.csv", "census.json", "orbits.csv", "scan.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let census: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("census.json")).unwrap()).unwrap();
    assert_eq!(census["k"].as_object().unwrap().len(), 10);
}

#[test]
fn config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = magneto(dir.path(), &["--scenario", "strip", "config"]);
    assert!(out.status.success());
    let path = dir.path().join("strip.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let again = magneto(dir.path(), &["--config", path.to_str().unwrap(), "config"]);
    assert!(again.status.success());
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn invalid_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"energy": {"k": -1.0}}"#).unwrap();
    let out = magneto(dir.path(), &["--config", path.to_str().unwrap(), "verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("error: kind="));
}
