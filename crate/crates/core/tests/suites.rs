//! Full (non-quick) runs of the propagator-versus-closed-form validation
//! suites. The diffusion-length suite takes tens of seconds and has its
//! own end-to-end coverage, so only the four fast suites run here.

use latdiff_core::{all_passed, run_suite, ComparisonReport, Suite};

fn assert_suite(suite: Suite) {
    let reports = run_suite(suite, false);
    assert!(!reports.is_empty(), "suite {} produced no reports", suite.name());
    for report in reports.iter().filter(|r| !r.passed) {
        eprintln!("FAIL {:#?}", report);
    }
    assert!(all_passed(&reports), "suite {} has failures", suite.name());
    for report in &reports {
        assert_finite(report);
    }
}

/// Every recorded deviation is a finite number: a suite that passes on NaN
/// comparisons would be vacuous.
fn assert_finite(report: &ComparisonReport) {
    assert!(report.max_abs_err.is_finite(), "{}: non-finite deviation", report.case);
    assert!(report.max_rel_err.is_finite(), "{}: non-finite deviation", report.case);
    assert!(report.points > 0, "{}: empty comparison", report.case);
}

#[test]
fn closed_system_suite_passes_in_full() {
    assert_suite(Suite::ClosedSystem);
}

#[test]
fn dephasing_suite_passes_in_full() {
    assert_suite(Suite::Hsr);
}

#[test]
fn coherence_law_suite_passes_in_full() {
    assert_suite(Suite::CoherenceLaw);
}

#[test]
fn identity_suite_passes_in_full() {
    assert_suite(Suite::Identities);
}
