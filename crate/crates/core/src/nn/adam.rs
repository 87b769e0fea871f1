use super::tensor::Tensor;
use crate::error::{ensure_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamConfig {
    /// Adversarial-training defaults: `alpha = 2e-4, beta1 = 0.5, beta2 = 0.999`.
    fn default() -> Self {
        AdamConfig {
            alpha: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam over a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[&[usize]]) -> Self {
        AdamState {
            config,
            step_count: 0,
            m: shapes.iter().map(|d| Tensor::zeros(d)).collect(),
            v: shapes.iter().map(|d| Tensor::zeros(d)).collect(),
        }
    }

    pub fn for_params(config: AdamConfig, params: &[&Tensor]) -> Self {
        let shapes: Vec<&[usize]> = params.iter().map(|p| p.dims()).collect();
        AdamState::new(config, &shapes)
    }

    /// One update of every parameter; `step_count` advances by exactly one.
    pub fn apply(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        ensure_dim("adam_step", "parameter count", self.m.len(), params.len())?;
        ensure_dim("adam_step", "gradient count", self.m.len(), grads.len())?;
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.dims() != g.dims() || p.dims() != m.dims() {
                return Err(Error::shape("adam_step", "parameter size", m.len(), g.len().max(p.len())));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let AdamConfig {
            alpha,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bc1 = (1.0 - (beta1 as f64).powi(t)) as f32;
        let bc2 = (1.0 - (beta2 as f64).powi(t)) as f32;
        for (i, p) in params.iter_mut().enumerate() {
            let g = grads[i].data();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                let gj = g[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *w -= alpha * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }

    /// Single-tensor convenience wrapper.
    pub fn step_one(&mut self, param: &mut Tensor, grad: &Tensor) -> Result<()> {
        self.apply(&mut [param], &[grad])
    }
}
