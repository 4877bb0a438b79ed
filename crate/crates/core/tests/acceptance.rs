//! One test per acceptance criterion; each prints its PASS/FAIL line.

use deeptherm_core::acceptance::run_criterion;

fn criterion(id: usize) {
    let report = run_criterion(id);
    println!("{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn c01_oracle_equivalence() {
    criterion(1);
}

#[test]
fn c02_conservation() {
    criterion(2);
}

#[test]
fn c03_deep_thermalization_plateau() {
    criterion(3);
}

#[test]
fn c04_haar_self_test() {
    criterion(4);
}

#[test]
fn c05_purity_bound() {
    criterion(5);
}

#[test]
fn c06_porter_thomas() {
    criterion(6);
}

#[test]
fn c07_leakage_benchmark() {
    criterion(7);
}

#[test]
fn c08_calibration_round_trip() {
    criterion(8);
}

#[test]
fn c09_measurement_pipeline() {
    criterion(9);
}

#[test]
fn c10_determinism() {
    criterion(10);
}
