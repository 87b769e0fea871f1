use super::linalg::{add_column_sums, gemm};
use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{ensure_dim, Result};

/// Affine layer `y = W x + b` with `W: [out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }

    /// Uniform weights in `[-1/sqrt(in), 1/sqrt(in)]`, zero bias.
    pub fn init(input: usize, output: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input as f32).sqrt();
        Dense {
            w: rng.uniform(-bound, bound, &[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }

    pub fn from_tensors(w: Tensor, b: Tensor) -> Result<Self> {
        ensure_dim("Dense", "weight rank", 2, w.rank())?;
        ensure_dim("Dense", "bias length", w.dims()[0], b.len())?;
        ensure_dim("Dense", "bias rank", 1, b.rank())?;
        Ok(Dense { w, b })
    }

    pub fn input_size(&self) -> usize {
        self.w.dims()[1]
    }

    pub fn output_size(&self) -> usize {
        self.w.dims()[0]
    }

    /// Single-vector forward pass.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        ensure_dim("dense_forward", "input", self.input_size(), x.len())?;
        Ok(Tensor::vector(self.forward_rows(x.data(), 1)))
    }

    /// Forward over `rows` stacked inputs `[rows, in]`, returning `[rows, out]`.
    pub fn forward_rows(&self, x: &[f32], rows: usize) -> Vec<f32> {
        let (out, inp) = (self.output_size(), self.input_size());
        let mut y = vec![0.0f32; rows * out];
        for r in 0..rows {
            y[r * out..(r + 1) * out].copy_from_slice(self.b.data());
        }
        gemm(rows, inp, out, x, false, self.w.data(), true, 1.0, &mut y);
        y
    }

    /// Gradients for a single-vector call.
    pub fn backward(&self, x: &Tensor, grad_y: &Tensor) -> Result<(DenseGrads, Tensor)> {
        ensure_dim("dense_backward", "input", self.input_size(), x.len())?;
        ensure_dim("dense_backward", "output gradient", self.output_size(), grad_y.len())?;
        let (grads, gx) = self.backward_rows(x.data(), grad_y.data(), 1, true);
        Ok((grads.expect("requested"), Tensor::vector(gx)))
    }

    /// Backward over stacked rows. Parameter gradients are summed over rows.
    pub fn backward_rows(
        &self,
        x: &[f32],
        grad_y: &[f32],
        rows: usize,
        param_grads: bool,
    ) -> (Option<DenseGrads>, Vec<f32>) {
        let (out, inp) = (self.output_size(), self.input_size());
        let grads = param_grads.then(|| {
            let mut gw = Tensor::zeros(&[out, inp]);
            gemm(out, rows, inp, grad_y, true, x, false, 0.0, gw.data_mut());
            let mut gb = Tensor::zeros(&[out]);
            add_column_sums(grad_y, rows, out, gb.data_mut());
            DenseGrads { w: gw, b: gb }
        });
        let mut gx = vec![0.0f32; rows * inp];
        gemm(rows, out, inp, grad_y, false, self.w.data(), false, 0.0, &mut gx);
        (grads, gx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{central_differences, GradCheck};

    #[test]
    fn identity_weights_pass_input_through() {
        let mut d = Dense::zeros(3, 3);
        for i in 0..3 {
            d.w.data_mut()[i * 3 + i] = 1.0;
        }
        let x = Tensor::vector(vec![0.5, -2.0, 7.0]);
        assert_eq!(d.forward(&x).unwrap(), x);
    }

    #[test]
    fn zero_weights_emit_bias() {
        let mut d = Dense::zeros(4, 2);
        d.b = Tensor::vector(vec![1.5, -0.25]);
        let y = d.forward(&Tensor::vector(vec![9.0, 8.0, 7.0, 6.0])).unwrap();
        assert_eq!(y.data(), &[1.5, -0.25]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let d = Dense::zeros(4, 2);
        assert!(d.forward(&Tensor::vector(vec![1.0; 3])).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(11);
        let d = Dense::init(5, 3, &mut rng);
        let x = rng.uniform(-1.0, 1.0, &[5]);
        // loss = sum_j c_j * y_j with fixed random c
        let c = rng.uniform(-1.0, 1.0, &[3]);
        let (grads, gx) = d.backward(&x, &c).unwrap();

        let w0: Vec<f64> = d.w.data().iter().map(|&v| v as f64).collect();
        let b0: Vec<f64> = d.b.data().iter().map(|&v| v as f64).collect();
        let x0: Vec<f64> = x.data().iter().map(|&v| v as f64).collect();
        let c0: Vec<f64> = c.data().iter().map(|&v| v as f64).collect();
        let loss = |w: &[f64], b: &[f64], x: &[f64]| -> f64 {
            (0..3)
                .map(|j| {
                    let y: f64 = b[j] + (0..5).map(|i| w[j * 5 + i] * x[i]).sum::<f64>();
                    c0[j] * y
                })
                .sum()
        };
        let mut report = GradCheck::default();
        report.compare("w", grads.w.data(), &central_differences(&w0, 1e-3, |w| loss(w, &b0, &x0)));
        report.compare("b", grads.b.data(), &central_differences(&b0, 1e-3, |b| loss(&w0, b, &x0)));
        report.compare("x", gx.data(), &central_differences(&x0, 1e-3, |x| loss(&w0, &b0, x)));
        report.assert_within(1e-3, 1e-5);
    }
}
