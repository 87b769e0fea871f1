mod common;

use common::grad_suite::{self, FLOOR, REL};

#[test]
fn lstm_layer_matches_finite_differences() {
    grad_suite::lstm_layer().assert_within(REL, FLOOR);
}

#[test]
fn stacked_lstm_sum_of_hidden_matches_finite_differences() {
    grad_suite::lstm_stacked().assert_within(REL, FLOOR);
}

#[test]
fn dense_matches_finite_differences() {
    grad_suite::dense().assert_within(REL, FLOOR);
}

#[test]
fn activation_derivatives_match_finite_differences() {
    grad_suite::activations().assert_within(REL, FLOOR);
}

#[test]
fn bce_matches_finite_differences() {
    grad_suite::bce().assert_within(REL, FLOOR);
}

#[test]
fn l1_matches_finite_differences() {
    grad_suite::l1().assert_within(REL, FLOOR);
}

#[test]
fn generator_discriminator_composite_matches_finite_differences() {
    for target in [0.0, 1.0] {
        let report = grad_suite::composite(target);
        assert!(report.total_checked() > 300);
        report.assert_within(REL, FLOOR);
    }
}

#[test]
fn inversion_objective_gradient_matches_finite_differences() {
    grad_suite::inversion_objective().assert_within(REL, FLOOR);
}
