//! Acceptance suite: one test per criterion, each printing its summary line.
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use fracfilt_core::acceptance as acc;

fn assert_criterion(c: acc::Criterion) {
    println!("{}", c.summary_line());
    assert!(c.passed, "{}", c.summary_line());
}

#[test]
fn criterion_01_bessel_layer() {
    assert_criterion(acc::criterion_01_bessel_layer());
}

#[test]
fn criterion_02_extension_closed_form() {
    assert_criterion(acc::criterion_02_extension_closed_form());
}

#[test]
fn criterion_03_dirichlet_to_neumann() {
    assert_criterion(acc::criterion_03_dtn());
}

#[test]
fn criterion_04_energy_identity() {
    assert_criterion(acc::criterion_04_energy_identity());
}

#[test]
fn criterion_05_poisson_kernel() {
    assert_criterion(acc::criterion_05_poisson_kernel());
}

#[test]
fn criterion_06_linear_evolution() {
    assert_criterion(acc::criterion_06_linear_evolution());
}

#[test]
fn criterion_07_linf_and_comparison() {
    assert_criterion(acc::criterion_07_linf_and_comparison());
}

#[test]
fn criterion_08_domain_monotonicity() {
    assert_criterion(acc::criterion_08_domain_monotonicity());
}

#[test]
fn criterion_09_cutoff_scaling() {
    assert_criterion(acc::criterion_09_cutoff_scaling());
}

#[test]
fn criterion_10_duality() {
    assert_criterion(acc::criterion_10_duality());
}

#[test]
fn criterion_11_translation() {
    assert_criterion(acc::criterion_11_translation());
}
