//! End-to-end tests of the binary: artifact production, subcommand
//! composability, and failure behavior.

use std::path::Path;
use std::process::Command;

fn fingerloc(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fingerloc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning fingerloc")
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = fingerloc(dir.path(), &["run", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "placement.json",
        "radio_map.json",
        "trace.csv",
        "filtered.csv",
        "model.json",
        "loss.csv",
        "report.json",
        "scatter.csv",
        "error_cdf.csv",
    ] {
        assert!(dir.path().join("out").join(name).exists(), "missing {name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert!(report["report"]["mean_error_m"].as_f64().unwrap() > 0.0);
}

#[test]
fn chained_subcommands_match_run() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["place", "--out", "placement.json"],
        vec![
            "simulate",
            "--placement",
            "placement.json",
            "--out-map",
            "radio_map.json",
            "--out-trace",
            "trace.csv",
        ],
        vec![
            "train",
            "--placement",
            "placement.json",
            "--out-model",
            "model.json",
            "--out-loss",
            "loss.csv",
        ],
        vec![
            "evaluate",
            "--model",
            "model.json",
            "--map",
            "radio_map.json",
            "--out",
            "report.json",
        ],
        vec!["run", "--out-dir", "out"],
    ] {
        let out = fingerloc(dir.path(), &args);
        assert!(
            out.status.success(),
            "{:?}: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let chained = std::fs::read(dir.path().join("report.json")).unwrap();
    let one_shot = std::fs::read(dir.path().join("out/report.json")).unwrap();
    assert_eq!(chained, one_shot, "chained subcommands diverge from run");
}

#[test]
fn filter_round_trips_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = "timestamp_ms,source_id,rssi_dbm\n0,0,-50\n100,0,-48\n200,0,-52\n";
    std::fs::write(dir.path().join("trace.csv"), trace).unwrap();
    let out = fingerloc(
        dir.path(),
        &["filter", "--input", "trace.csv", "--output", "filtered.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let filtered = std::fs::read_to_string(dir.path().join("filtered.csv")).unwrap();
    assert!(filtered.starts_with("timestamp_ms,source_id,rssi_dbm,rssi_filtered_dbm"));
    assert_eq!(filtered.lines().count(), 4);
}

#[test]
fn invalid_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"train_fraction": 2.0}"#).unwrap();
    let out = fingerloc(dir.path(), &["run", "--config", "bad.json"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("train_fraction"), "stderr: {stderr}");
}

#[test]
fn seed_override_changes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, out_dir) in [("1", "a"), ("99", "b")] {
        let out = fingerloc(
            dir.path(),
            &["run", "--synthesis-seed", seed, "--out-dir", out_dir],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/report.json")).unwrap();
    assert_ne!(a, b, "different synthesis seeds produced identical reports");
}
