use std::io::Write;

use harmcrit::suite::{verify_all, Status, SuiteOptions};

#[test]
fn acceptance() {
    let report = verify_all(&SuiteOptions::default());
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    for r in &report.results {
        let verdict = if r.status == Status::Fail { "FAIL" } else { "PASS" };
        let budget = if r.over_budget() { format!(" [over {} s budget]", r.budget_s) } else { String::new() };
        writeln!(err, "AC{:<2} {verdict}  {} ({}, {:.1}s){budget}: {}", r.id, r.name, r.status.as_str(), r.runtime_s, r.detail).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    assert!(dir.path().join("summary.csv").exists());

    assert_eq!(report.results.iter().map(|r| r.id).collect::<Vec<_>>(), (1..=13).collect::<Vec<u8>>());
    assert!(report.results.iter().all(|r| r.status != Status::Warn), "warnings at default quadrature");
    assert!(report.passed(), "failing criteria: {:?}", report.failures());
}
