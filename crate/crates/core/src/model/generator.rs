use crate::error::{ensure_dim, Error, Result};
use crate::nn::{
    BackwardOptions, Dense, DenseGrads, LstmCache, LstmGrads, LstmParams, Rng, SeqInput, Tensor,
};

/// Stacked-LSTM generator. The latent vector is fed at every step of the
/// first layer; a shared per-step dense layer plus tanh turns the top hidden
/// state into one output value per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub latent_dim: usize,
    pub window_len: usize,
    pub layers: Vec<LstmParams>,
    pub out: Dense,
}

#[derive(Debug, Clone)]
pub struct GenGrads {
    pub layers: Vec<LstmGrads>,
    pub out: DenseGrads,
}

impl GenGrads {
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.extend([&l.w, &l.u, &l.b]);
        }
        v.extend([&self.out.w, &self.out.b]);
        v
    }
}

/// Forward state for a batch of latent vectors.
#[derive(Debug, Clone)]
pub struct GenCache {
    batch: usize,
    layers: Vec<LstmCache>,
    /// tanh outputs, time-major `[T * B]`.
    outputs: Vec<f32>,
}

impl GenCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Generated windows, batch-major `[B, T]`.
    pub fn windows(&self) -> Vec<f32> {
        let steps = self.outputs.len() / self.batch.max(1);
        time_to_batch_major(&self.outputs, steps, self.batch)
    }
}

pub(crate) fn time_to_batch_major(x: &[f32], steps: usize, batch: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; steps * batch];
    for t in 0..steps {
        for b in 0..batch {
            out[b * steps + t] = x[t * batch + b];
        }
    }
    out
}

pub(crate) fn batch_to_time_major(x: &[f32], steps: usize, batch: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; steps * batch];
    for b in 0..batch {
        for t in 0..steps {
            out[t * batch + b] = x[b * steps + t];
        }
    }
    out
}

impl Generator {
    fn build(latent_dim: usize, hidden: &[usize], window_len: usize, mut make: impl FnMut(usize, usize) -> LstmParams, out: Dense) -> Self {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut prev = latent_dim;
        for &h in hidden {
            layers.push(make(prev, h));
            prev = h;
        }
        Generator {
            latent_dim,
            window_len,
            layers,
            out,
        }
    }

    pub fn zeros(latent_dim: usize, hidden: &[usize], window_len: usize) -> Self {
        let top = *hidden.last().expect("at least one LSTM layer");
        Self::build(latent_dim, hidden, window_len, LstmParams::zeros, Dense::zeros(top, 1))
    }

    pub fn init(latent_dim: usize, hidden: &[usize], window_len: usize, rng: &mut Rng) -> Self {
        let top = *hidden.last().expect("at least one LSTM layer");
        let mut layers = Vec::with_capacity(hidden.len());
        let mut prev = latent_dim;
        for &h in hidden {
            layers.push(LstmParams::init(prev, h, rng));
            prev = h;
        }
        Generator {
            latent_dim,
            window_len,
            layers,
            out: Dense::init(top, 1, rng),
        }
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.hidden_size()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum::<usize>() + self.out.w.len() + self.out.b.len()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.extend([&l.w, &l.u, &l.b]);
        }
        v.extend([&self.out.w, &self.out.b]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = Vec::new();
        for l in &mut self.layers {
            v.extend([&mut l.w, &mut l.u, &mut l.b]);
        }
        v.extend([&mut self.out.w, &mut self.out.b]);
        v
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut v = Vec::new();
        for i in 0..self.layers.len() {
            for p in ["w", "u", "b"] {
                v.push(format!("gen.lstm{i}.{p}"));
            }
        }
        v.push("gen.out.w".into());
        v.push("gen.out.b".into());
        v
    }

    /// Single latent vector to one generated window of `window_len` values.
    pub fn generate(&self, z: &Tensor) -> Result<Tensor> {
        ensure_dim("generate", "latent dimension", self.latent_dim, z.len())?;
        if !z.is_finite() {
            return Err(Error::Numeric("generate: latent vector is not finite".into()));
        }
        let cache = self.forward_batch(z.data(), 1)?;
        Ok(Tensor::vector(cache.windows()))
    }

    /// `z` is `[B, latent]`.
    pub fn forward_batch(&self, z: &[f32], batch: usize) -> Result<GenCache> {
        ensure_dim("generate", "latent elements", batch * self.latent_dim, z.len())?;
        let steps = self.window_len;
        let mut caches: Vec<LstmCache> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let cache = if i == 0 {
                layer.forward_batch(SeqInput::Repeated(z), steps, batch, None, None)?
            } else {
                let below = caches[i - 1].hidden_seq();
                layer.forward_batch(SeqInput::PerStep(below), steps, batch, None, None)?
            };
            caches.push(cache);
        }
        let top = caches.last().expect("non-empty stack").hidden_seq();
        let mut outputs = self.out.forward_rows(top, steps * batch);
        crate::nn::kernels::tanh_slice(&mut outputs);
        Ok(GenCache {
            batch,
            layers: caches,
            outputs,
        })
    }

    /// Back-propagates `dL/dwindow` (`[B, T]`) to the parameters and latent
    /// inputs. Returns `(param grads, dL/dz [B, latent])`.
    pub fn backward_batch(
        &self,
        cache: &GenCache,
        grad_windows: &[f32],
        param_grads: bool,
    ) -> Result<(Option<GenGrads>, Vec<f32>)> {
        let (steps, batch) = (self.window_len, cache.batch);
        ensure_dim("generator backward", "output gradient", steps * batch, grad_windows.len())?;
        let g_out = batch_to_time_major(grad_windows, steps, batch);
        let d_pre: Vec<f32> = g_out
            .iter()
            .zip(&cache.outputs)
            .map(|(g, y)| g * (1.0 - y * y))
            .collect();
        let top = cache.layers.last().expect("non-empty stack");
        let (out_grads, mut grad_h) = self.out.backward_rows(top.hidden_seq(), &d_pre, steps * batch, param_grads);

        let opts = BackwardOptions {
            param_grads,
            input_grads: true,
        };
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let back = self.layers[i].backward_batch(&cache.layers[i], &grad_h, opts)?;
            if let Some(g) = back.grads {
                layer_grads.push(g);
            }
            grad_h = back.grad_input;
        }
        layer_grads.reverse();
        let grads = out_grads.map(|out| GenGrads {
            layers: layer_grads,
            out,
        });
        Ok((grads, grad_h))
    }
}
