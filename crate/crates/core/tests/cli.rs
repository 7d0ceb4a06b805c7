// SPDX-License-Identifier: Apache-2.0

use std::process::Command;

fn ringcap(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ringcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn small_p_exits_with_config_error() {
    let out = ringcap(&["cap", "--shape", "annulus:0.5,1", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must exceed 1"));
}

#[test]
fn unknown_names_exit_with_config_error() {
    assert_eq!(
        ringcap(&["suite", "--criteria", "nonsense"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ringcap(&["verify-ring", "--map", "swirl:1"]).status.code(),
        Some(2)
    );
}

#[test]
fn coarse_suite_reports_insufficient_resolution() {
    let out = ringcap(&["suite", "--res", "32", "--criteria", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for c in v["result"].as_array().unwrap() {
        assert_eq!(c["status"], "insufficient-resolution");
    }
}

#[test]
fn verify_ring_writes_summary_and_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let out = ringcap(&[
        "verify-ring",
        "--map",
        "radial:4",
        "--p",
        "2",
        "--rings",
        "origin-centered:5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(v["seed"], 0);
    assert!((v["result"]["sup_ratio"].as_f64().unwrap() - 2.0).abs() < 0.02);
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 6);
}

#[test]
fn config_file_and_reproducible_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "shape = \"annulus:0.5,1\"\np = 1.5\nres = 64\nseed = 3\n",
    )
    .unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = ringcap(&[
            "cap",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(out_dir.join("summary.json")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["config"]["p"], 1.5);
}
