use super::generator::{batch_to_time_major, time_to_batch_major};
use crate::error::{ensure_dim, Result};
use crate::nn::activation::sigmoid;
use crate::nn::{BackwardOptions, Dense, DenseGrads, LstmCache, LstmGrads, LstmParams, Rng, SeqInput, Tensor};

/// Single-layer LSTM discriminator with a sigmoid read-out of the last
/// hidden state. The full hidden sequence doubles as the feature map used
/// for anomaly scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub lstm: LstmParams,
    pub out: Dense,
}

#[derive(Debug, Clone)]
pub struct DiscGrads {
    pub lstm: LstmGrads,
    pub out: DenseGrads,
}

impl DiscGrads {
    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.lstm.w, &self.lstm.u, &self.lstm.b, &self.out.w, &self.out.b]
    }
}

#[derive(Debug, Clone)]
pub struct DiscCache {
    steps: usize,
    batch: usize,
    lstm: LstmCache,
    logits: Vec<f32>,
}

impl DiscCache {
    pub fn logits(&self) -> &[f32] {
        &self.logits
    }

    pub fn probabilities(&self) -> Vec<f32> {
        self.logits.iter().map(|&l| sigmoid(l)).collect()
    }

    /// Hidden-state features, time-major `[T * B, H]`.
    pub fn features(&self) -> &[f32] {
        self.lstm.hidden_seq()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl Discriminator {
    pub fn zeros(hidden: usize) -> Self {
        Discriminator {
            lstm: LstmParams::zeros(1, hidden),
            out: Dense::zeros(hidden, 1),
        }
    }

    pub fn init(hidden: usize, rng: &mut Rng) -> Self {
        let lstm = LstmParams::init(1, hidden, rng);
        let out = Dense::init(hidden, 1, rng);
        Discriminator { lstm, out }
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size()
    }

    pub fn param_count(&self) -> usize {
        self.lstm.param_count() + self.out.w.len() + self.out.b.len()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.lstm.w, &self.lstm.u, &self.lstm.b, &self.out.w, &self.out.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.lstm.w,
            &mut self.lstm.u,
            &mut self.lstm.b,
            &mut self.out.w,
            &mut self.out.b,
        ]
    }

    pub fn param_names(&self) -> Vec<String> {
        ["disc.lstm.w", "disc.lstm.u", "disc.lstm.b", "disc.out.w", "disc.out.b"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    /// Probability that `x` is real, plus the hidden-state features `[T, H]`.
    pub fn discriminate(&self, x: &Tensor) -> Result<(f32, Tensor)> {
        ensure_dim("discriminate", "input rank", 1, x.rank())?;
        let steps = x.len();
        let cache = self.forward_batch(x.data(), steps, 1)?;
        let features = Tensor::from_vec(&[steps, self.hidden_size()], cache.features().to_vec())?;
        Ok((sigmoid(cache.logits[0]), features))
    }

    /// `x` is batch-major `[B, T]`.
    pub fn forward_batch(&self, x: &[f32], steps: usize, batch: usize) -> Result<DiscCache> {
        ensure_dim("discriminate", "input elements", steps * batch, x.len())?;
        let tm = batch_to_time_major(x, steps, batch);
        let lstm = self.lstm.forward_batch(SeqInput::PerStep(&tm), steps, batch, None, None)?;
        let logits = self.out.forward_rows(lstm.last_hidden(), batch);
        Ok(DiscCache {
            steps,
            batch,
            lstm,
            logits,
        })
    }

    /// Back-propagates gradients on the logits (`[B]`) and optionally on the
    /// time-major features (`[T*B, H]`). Returns parameter gradients (when
    /// requested) and `dL/dx` in batch-major layout (when requested).
    pub fn backward_batch(
        &self,
        cache: &DiscCache,
        grad_logits: &[f32],
        grad_features: Option<&[f32]>,
        opts: BackwardOptions,
    ) -> Result<(Option<DiscGrads>, Vec<f32>)> {
        let (steps, batch, h) = (cache.steps, cache.batch, self.hidden_size());
        ensure_dim("discriminator backward", "logit gradient", batch, grad_logits.len())?;
        let (out_grads, g_last) =
            self.out
                .backward_rows(cache.lstm.last_hidden(), grad_logits, batch, opts.param_grads);
        let mut grad_h = match grad_features {
            Some(gf) => {
                ensure_dim("discriminator backward", "feature gradient", steps * batch * h, gf.len())?;
                gf.to_vec()
            }
            None => vec![0.0f32; steps * batch * h],
        };
        let last = (steps - 1) * batch * h;
        grad_h[last..]
            .iter_mut()
            .zip(&g_last)
            .for_each(|(a, b)| *a += b);
        let back = self.lstm.backward_batch(&cache.lstm, &grad_h, opts)?;
        let grads = match (back.grads, out_grads) {
            (Some(lstm), Some(out)) => Some(DiscGrads { lstm, out }),
            _ => None,
        };
        let gx = if opts.input_grads {
            time_to_batch_major(&back.grad_input, steps, batch)
        } else {
            Vec::new()
        };
        Ok((grads, gx))
    }
}
