//! Elementwise nonlinearities and their derivatives.

pub use super::kernels::{sigmoid, tanh};

/// Derivative of the sigmoid expressed through its output `y = sigmoid(x)`.
#[inline]
pub fn sigmoid_grad_from_output(y: f32) -> f32 {
    y * (1.0 - y)
}

/// Derivative of tanh expressed through its output `y = tanh(x)`.
#[inline]
pub fn tanh_grad_from_output(y: f32) -> f32 {
    1.0 - y * y
}

pub use super::kernels::{sigmoid_slice as sigmoid_in_place, tanh_slice as tanh_in_place};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(tanh(0.0), 0.0);
    }

    #[test]
    fn sigmoid_stays_finite_and_in_range() {
        for &x in &[-1e4f32, -100.0, -20.0, -1.0, 0.0, 1.0, 20.0, 100.0, 1e4] {
            let y = sigmoid(x);
            assert!(y.is_finite());
            assert!((0.0..=1.0).contains(&y));
        }
        // strictly inside for moderate inputs
        assert!(sigmoid(-15.0) > 0.0 && sigmoid(15.0) < 1.0);
        assert!(tanh(5.0) < 1.0 && tanh(-5.0) > -1.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-4f64;
        for i in -30..=30 {
            let x = i as f64 * 0.2;
            let s = |v: f64| 1.0 / (1.0 + (-v).exp());
            let fd_sig = (s(x + h) - s(x - h)) / (2.0 * h);
            let fd_tanh = ((x + h).tanh() - (x - h).tanh()) / (2.0 * h);
            let an_sig = sigmoid_grad_from_output(sigmoid(x as f32)) as f64;
            let an_tanh = tanh_grad_from_output(tanh(x as f32)) as f64;
            assert!((fd_sig - an_sig).abs() < 1e-5, "sigmoid' at {x}: {fd_sig} vs {an_sig}");
            assert!((fd_tanh - an_tanh).abs() < 1e-5, "tanh' at {x}: {fd_tanh} vs {an_tanh}");
        }
    }
}
