//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the worst observed deviation. Run with `--nocapture` to see every
//! line; a failing criterion prints its report in the assertion message.

use onebit_put::verify::{self, Grid};

fn run(report: verify::CheckReport, budget_s: Option<f64>) {
    println!("{}", report.line());
    assert!(report.passed, "criterion failed: {}", report.line());
    if let Some(budget) = budget_s {
        assert!(
            report.elapsed_s < budget,
            "criterion exceeded its {budget}s budget: {}",
            report.line()
        );
    }
}

#[test]
fn criterion_1_formula_agreement() {
    run(verify::formula_agreement(&Grid::full()), Some(5.0));
}

#[test]
fn criterion_2_attainment() {
    run(verify::attainment(&Grid::full()), Some(30.0));
}

#[test]
fn criterion_3_example_reproduction() {
    run(verify::example_reproduction(), None);
}

#[test]
fn criterion_4_unbiasedness() {
    run(verify::unbiasedness(&Grid::full()), None);
}

#[test]
fn criterion_5_concavity_and_worst_case() {
    run(verify::concavity_and_worst_case(&Grid::full()), None);
}

#[test]
fn criterion_6_calibration() {
    run(verify::calibration_agreement(&Grid::full()), None);
}

#[test]
fn criterion_7_plain_scheme_sandwich() {
    run(verify::plain_scheme_sandwich(), None);
}

#[test]
fn criterion_8_monte_carlo() {
    run(verify::monte_carlo_consistency(&Grid::full()), Some(120.0));
}

#[test]
fn criterion_9_threshold_continuity() {
    run(verify::threshold_continuity(&Grid::full()), None);
}
