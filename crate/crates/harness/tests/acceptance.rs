use std::io::Write;

use shufflesgd_harness::acceptance::{acceptance_suite, Status, SuiteOptions};

#[test]
fn acceptance() {
    let empty = tempfile::tempdir().unwrap();
    let report = acceptance_suite(&SuiteOptions { data_dir: Some(empty.path().to_path_buf()), ..Default::default() });
    // Written past the test harness capture so the table shows up in plain `cargo test` output.
    let mut err = std::io::stderr().lock();
    writeln!(err, "\n{report}").unwrap();
    drop(err);
    let ids: Vec<&str> = report.results.iter().map(|r| r.id.as_str()).collect();
    for k in 1..=12 {
        assert!(
            ids.iter().any(|id| id.trim_end_matches(char::is_alphabetic) == k.to_string()),
            "criterion {k} missing"
        );
    }
    assert!(report.results.iter().filter(|r| r.status == Status::Skipped).all(|r| r.id.ends_with('d')));
    assert!(report.all_pass(), "failed: {:?}", report.failed());
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn planted_failure_is_named() {
    let report = acceptance_suite(&SuiteOptions {
        only: Some(vec![11]),
        tolerance_override: Some((11, -1.0)),
        ..Default::default()
    });
    assert_eq!(report.exit_code(), 1);
    let failed = report.failed();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].id, "11");
    assert!(report.to_string().contains("slope fitter calibration"));
}
