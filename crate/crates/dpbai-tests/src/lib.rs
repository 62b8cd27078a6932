//! Sequential runner for the workspace acceptance checks.
//!
//! Checks run one at a time so each wall-clock budget measures only its own
//! work, and every check prints a single `PASS` or `FAIL` line.

use std::time::{Duration, Instant};

/// Result of one check, before its time budget is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

/// A numbered check with a wall-clock budget.
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub budget: Duration,
    pub run: fn() -> Outcome,
}

/// Runs the checks whose id appears in `only` (all when empty) and reports
/// whether every one of them passed within its budget.
pub fn run_checks(checks: &[Check], only: &[u32]) -> bool {
    let mut all = true;
    for c in checks.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let out = (c.run)();
        let took = start.elapsed();
        let passed = out.passed && took <= c.budget;
        all &= passed;
        println!(
            "{} [{:>2}] {}: {} ({:.1} s, budget {} s)",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            out.detail,
            took.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    all
}

/// Numeric ids among the command-line arguments; flags are ignored.
pub fn selected_ids(args: impl IntoIterator<Item = String>) -> Vec<u32> {
    args.into_iter().filter_map(|a| a.parse().ok()).collect()
}
