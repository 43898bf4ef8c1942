//! Acceptance suite: runs every built-in check and prints one line per check.

use std::io::Write;

use subeq_cli::selftest::{run_criterion, CRITERIA};

const SEED: u64 = 20240607;

#[test]
fn acceptance() {
    // Written to the process stdout directly so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for id in 1..=CRITERIA.len() as u32 {
        let r = run_criterion(id, SEED);
        let status = if r.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status} [{:>2}] {}: {}", r.id, r.name, r.summary).unwrap();
        if !r.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing checks: {failed:?}");
}
