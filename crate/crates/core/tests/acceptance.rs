// SPDX-License-Identifier: Apache-2.0

//! Full acceptance battery. Prints one line per criterion straight to
//! stderr so the lines survive output capture.

use std::io::Write;

use ringcap::cli::{run_suite, CriterionStatus, SuiteConfig};

fn headline(detail: &serde_json::Value) -> String {
    let s = detail.to_string();
    if s.len() > 160 {
        format!("{}...", &s[..160])
    } else {
        s
    }
}

#[test]
fn acceptance_battery() {
    let cfg = SuiteConfig::default();
    let report = run_suite(&cfg).expect("suite runs");
    let mut err = std::io::stderr().lock();
    for (v, t) in report.verdicts.iter().zip(&report.timings) {
        let tag = match v.status {
            CriterionStatus::Pass => "PASS",
            CriterionStatus::Fail => "FAIL",
            CriterionStatus::InsufficientResolution => "SKIP",
            CriterionStatus::Error => "ERROR",
        };
        writeln!(
            err,
            "criterion {:>2} {:<16} {} ({:.1}s) {}",
            v.number,
            v.name,
            tag,
            t.seconds,
            headline(&v.detail)
        )
        .unwrap();
    }
    assert_eq!(report.verdicts.len(), 12);
    let failed: Vec<_> = report
        .verdicts
        .iter()
        .filter(|v| v.status != CriterionStatus::Pass)
        .map(|v| v.name.clone())
        .collect();
    assert!(failed.is_empty(), "criteria not passing: {failed:?}");
}
