//! Single LSTM layer with full backpropagation through time.
//!
//! Gate blocks are stacked in the fixed order (input, forget, cell, output)
//! along the first axis of `w`, `u` and `b`:
//!
//! ```text
//! a_t = W x_t + U h_{t-1} + b            (4H)
//! i = sigmoid(a[0..H])   f = sigmoid(a[H..2H])
//! g = tanh(a[2H..3H])    o = sigmoid(a[3H..4H])
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! Batched calls use a time-major layout: row `t * batch + b` holds step `t`
//! of sequence `b`.

use super::kernels::{lstm_cell_backward, lstm_cell_forward};
use super::linalg::{add_column_sums, gemm};
use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{ensure_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `[4H, input]`
    pub w: Tensor,
    /// `[4H, H]`
    pub u: Tensor,
    /// `[4H]`
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

/// Input sequence for a batched call.
#[derive(Debug, Clone, Copy)]
pub enum SeqInput<'a> {
    /// `[T * B, input]`, time-major.
    PerStep(&'a [f32]),
    /// `[B, input]`, fed unchanged at every step.
    Repeated(&'a [f32]),
}

/// Everything the backward pass needs from a forward call.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: usize,
    batch: usize,
    input_size: usize,
    hidden: usize,
    repeated: bool,
    input: Vec<f32>,
    /// Activated gates, `[T * B, 4H]`.
    gates: Vec<f32>,
    /// `c_0 .. c_T`, `[(T + 1) * B, H]`.
    cells: Vec<f32>,
    /// `tanh(c_1) .. tanh(c_T)`, `[T * B, H]`.
    tanh_cells: Vec<f32>,
    /// `h_0 .. h_T`, `[(T + 1) * B, H]`.
    hidden_all: Vec<f32>,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Hidden outputs `h_1 .. h_T`, `[T * B, H]` time-major.
    pub fn hidden_seq(&self) -> &[f32] {
        &self.hidden_all[self.batch * self.hidden..]
    }

    /// Final hidden state `h_T`, `[B, H]`.
    pub fn last_hidden(&self) -> &[f32] {
        &self.hidden_all[self.steps * self.batch * self.hidden..]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BackwardOptions {
    pub param_grads: bool,
    pub input_grads: bool,
}

impl BackwardOptions {
    pub const ALL: BackwardOptions = BackwardOptions {
        param_grads: true,
        input_grads: true,
    };
}

#[derive(Debug, Clone)]
pub struct LstmBackward {
    pub grads: Option<LstmGrads>,
    /// Same layout as the forward input (`[T*B, in]` or `[B, in]`); empty
    /// when input gradients were not requested.
    pub grad_input: Vec<f32>,
    /// `[B, H]`
    pub grad_h0: Vec<f32>,
    /// `[B, H]`
    pub grad_c0: Vec<f32>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden: usize) -> Self {
        LstmParams {
            w: Tensor::zeros(&[4 * hidden, input_size]),
            u: Tensor::zeros(&[4 * hidden, hidden]),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }

    /// Weights uniform in `[-1/sqrt(H), 1/sqrt(H)]`, biases zero except the
    /// forget block which starts at 1.
    pub fn init(input_size: usize, hidden: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (hidden as f32).sqrt();
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(1.0);
        LstmParams {
            w: rng.uniform(-bound, bound, &[4 * hidden, input_size]),
            u: rng.uniform(-bound, bound, &[4 * hidden, hidden]),
            b,
        }
    }

    pub fn from_tensors(w: Tensor, u: Tensor, b: Tensor) -> Result<Self> {
        ensure_dim("LstmParams", "w rank", 2, w.rank())?;
        ensure_dim("LstmParams", "u rank", 2, u.rank())?;
        ensure_dim("LstmParams", "b rank", 1, b.rank())?;
        let four_h = u.dims()[0];
        if four_h == 0 || four_h % 4 != 0 {
            return Err(Error::Data(format!("LSTM gate rows {four_h} not a positive multiple of 4")));
        }
        ensure_dim("LstmParams", "u columns", four_h / 4, u.dims()[1])?;
        ensure_dim("LstmParams", "w rows", four_h, w.dims()[0])?;
        ensure_dim("LstmParams", "b length", four_h, b.len())?;
        Ok(LstmParams { w, u, b })
    }

    pub fn input_size(&self) -> usize {
        self.w.dims()[1]
    }

    pub fn hidden_size(&self) -> usize {
        self.u.dims()[1]
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.u.len() + self.b.len()
    }

    /// Single-sequence forward: `inputs [T, in]`, `h0, c0 [H]`; returns the
    /// hidden sequence `[T, H]`.
    pub fn forward(&self, inputs: &Tensor, h0: &Tensor, c0: &Tensor) -> Result<(Tensor, LstmCache)> {
        ensure_dim("lstm_forward", "input rank", 2, inputs.rank())?;
        ensure_dim("lstm_forward", "input size", self.input_size(), inputs.dims()[1])?;
        ensure_dim("lstm_forward", "h0 length", self.hidden_size(), h0.len())?;
        ensure_dim("lstm_forward", "c0 length", self.hidden_size(), c0.len())?;
        let steps = inputs.dims()[0];
        let cache = self.forward_batch(
            SeqInput::PerStep(inputs.data()),
            steps,
            1,
            Some(h0.data()),
            Some(c0.data()),
        )?;
        let seq = Tensor::from_vec(&[steps, self.hidden_size()], cache.hidden_seq().to_vec())?;
        Ok((seq, cache))
    }

    /// Single-sequence backward matching [`LstmParams::forward`].
    pub fn backward(
        &self,
        cache: &LstmCache,
        grad_hidden_seq: &Tensor,
    ) -> Result<(LstmGrads, Tensor, Tensor, Tensor)> {
        ensure_dim("lstm_backward", "cache batch", 1, cache.batch)?;
        let out = self.backward_batch(cache, grad_hidden_seq.data(), BackwardOptions::ALL)?;
        let h = self.hidden_size();
        Ok((
            out.grads.expect("requested"),
            Tensor::from_vec(&[cache.steps, self.input_size()], out.grad_input)?,
            Tensor::from_vec(&[h], out.grad_h0)?,
            Tensor::from_vec(&[h], out.grad_c0)?,
        ))
    }

    /// Batched forward pass. Missing initial states default to zeros.
    pub fn forward_batch(
        &self,
        input: SeqInput<'_>,
        steps: usize,
        batch: usize,
        h0: Option<&[f32]>,
        c0: Option<&[f32]>,
    ) -> Result<LstmCache> {
        let (n_in, h) = (self.input_size(), self.hidden_size());
        let g4 = 4 * h;
        if steps == 0 {
            return Err(Error::shape("lstm_forward", "sequence length (>= 1)", 1, 0));
        }
        let rows = steps * batch;
        let (input_vec, repeated) = match input {
            SeqInput::PerStep(x) => {
                ensure_dim("lstm_forward", "input elements", rows * n_in, x.len())?;
                (x.to_vec(), false)
            }
            SeqInput::Repeated(x) => {
                ensure_dim("lstm_forward", "input elements", batch * n_in, x.len())?;
                (x.to_vec(), true)
            }
        };

        let mut gates = vec![0.0f32; rows * g4];
        if repeated {
            let mut base = vec![0.0f32; batch * g4];
            for r in 0..batch {
                base[r * g4..(r + 1) * g4].copy_from_slice(self.b.data());
            }
            gemm(batch, n_in, g4, &input_vec, false, self.w.data(), true, 1.0, &mut base);
            for t in 0..steps {
                gates[t * batch * g4..(t + 1) * batch * g4].copy_from_slice(&base);
            }
        } else {
            for r in 0..rows {
                gates[r * g4..(r + 1) * g4].copy_from_slice(self.b.data());
            }
            gemm(rows, n_in, g4, &input_vec, false, self.w.data(), true, 1.0, &mut gates);
        }

        let mut hidden_all = vec![0.0f32; (steps + 1) * batch * h];
        let mut cells = vec![0.0f32; (steps + 1) * batch * h];
        if let Some(h0) = h0 {
            ensure_dim("lstm_forward", "h0 elements", batch * h, h0.len())?;
            hidden_all[..batch * h].copy_from_slice(h0);
        }
        if let Some(c0) = c0 {
            ensure_dim("lstm_forward", "c0 elements", batch * h, c0.len())?;
            cells[..batch * h].copy_from_slice(c0);
        }
        let mut tanh_cells = vec![0.0f32; rows * h];

        let bh = batch * h;
        for t in 0..steps {
            let pre = &mut gates[t * batch * g4..(t + 1) * batch * g4];
            let (h_done, h_rest) = hidden_all.split_at_mut((t + 1) * bh);
            let h_prev = &h_done[t * bh..];
            gemm(batch, h, g4, h_prev, false, self.u.data(), true, 1.0, pre);
            let h_next = &mut h_rest[..bh];
            let (c_done, c_rest) = cells.split_at_mut((t + 1) * bh);
            let c_prev = &c_done[t * bh..];
            let c_next = &mut c_rest[..bh];
            let tc = &mut tanh_cells[t * bh..(t + 1) * bh];
            for r in 0..batch {
                let k = r * h..(r + 1) * h;
                lstm_cell_forward(
                    &mut pre[r * g4..(r + 1) * g4],
                    &c_prev[k.clone()],
                    &mut c_next[k.clone()],
                    &mut tc[k.clone()],
                    &mut h_next[k],
                );
            }
        }

        Ok(LstmCache {
            steps,
            batch,
            input_size: n_in,
            hidden: h,
            repeated,
            input: input_vec,
            gates,
            cells,
            tanh_cells,
            hidden_all,
        })
    }

    /// Batched BPTT. `grad_hidden` is `dL/dh_t` for every step, `[T*B, H]`.
    pub fn backward_batch(
        &self,
        cache: &LstmCache,
        grad_hidden: &[f32],
        opts: BackwardOptions,
    ) -> Result<LstmBackward> {
        let (steps, batch, h) = (cache.steps, cache.batch, cache.hidden);
        ensure_dim("lstm_backward", "cache hidden size", self.hidden_size(), h)?;
        ensure_dim("lstm_backward", "cache input size", self.input_size(), cache.input_size)?;
        let rows = steps * batch;
        ensure_dim("lstm_backward", "grad_hidden elements", rows * h, grad_hidden.len())?;
        let g4 = 4 * h;
        let bh = batch * h;
        let n_in = cache.input_size;

        let mut d_pre = vec![0.0f32; rows * g4];
        let mut dh_next = vec![0.0f32; bh];
        let mut dc_next = vec![0.0f32; bh];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * batch * g4..(t + 1) * batch * g4];
            let c_prev = &cache.cells[t * bh..(t + 1) * bh];
            let tc = &cache.tanh_cells[t * bh..(t + 1) * bh];
            let gh = &grad_hidden[t * bh..(t + 1) * bh];
            let dp = &mut d_pre[t * batch * g4..(t + 1) * batch * g4];
            for (k, dh) in dh_next.iter_mut().enumerate() {
                *dh += gh[k];
            }
            for r in 0..batch {
                let k = r * h..(r + 1) * h;
                lstm_cell_backward(
                    &gates[r * g4..(r + 1) * g4],
                    &c_prev[k.clone()],
                    &tc[k.clone()],
                    &dh_next[k.clone()],
                    &mut dc_next[k],
                    &mut dp[r * g4..(r + 1) * g4],
                );
            }
            gemm(batch, g4, h, dp, false, self.u.data(), false, 0.0, &mut dh_next);
        }

        // For repeated inputs the input-side terms only see the step sum.
        let summed;
        let (d_in, in_rows): (&[f32], usize) = if cache.repeated {
            let mut s = vec![0.0f32; batch * g4];
            for t in 0..steps {
                s.iter_mut()
                    .zip(&d_pre[t * batch * g4..(t + 1) * batch * g4])
                    .for_each(|(a, b)| *a += b);
            }
            summed = s;
            (&summed, batch)
        } else {
            (&d_pre, rows)
        };

        let grads = opts.param_grads.then(|| {
            let mut gw = Tensor::zeros(&[g4, n_in]);
            gemm(g4, in_rows, n_in, d_in, true, &cache.input, false, 0.0, gw.data_mut());
            let mut gu = Tensor::zeros(&[g4, h]);
            gemm(g4, rows, h, &d_pre, true, &cache.hidden_all[..rows * h], false, 0.0, gu.data_mut());
            let mut gb = Tensor::zeros(&[g4]);
            add_column_sums(&d_pre, rows, g4, gb.data_mut());
            LstmGrads { w: gw, u: gu, b: gb }
        });

        let grad_input = if opts.input_grads {
            let mut gx = vec![0.0f32; in_rows * n_in];
            gemm(in_rows, g4, n_in, d_in, false, self.w.data(), false, 0.0, &mut gx);
            gx
        } else {
            Vec::new()
        };

        Ok(LstmBackward {
            grads,
            grad_input,
            grad_h0: dh_next,
            grad_c0: dc_next,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar f64 reference of one layer over one sequence; returns all h_t.
    fn reference_forward(
        w: &[f64],
        u: &[f64],
        b: &[f64],
        x: &[f64],
        n_in: usize,
        h: usize,
        h0: &[f64],
        c0: &[f64],
    ) -> Vec<f64> {
        let steps = x.len() / n_in;
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut hp = h0.to_vec();
        let mut cp = c0.to_vec();
        let mut out = Vec::new();
        for t in 0..steps {
            let xt = &x[t * n_in..(t + 1) * n_in];
            let mut a = vec![0.0; 4 * h];
            for r in 0..4 * h {
                let mut acc = b[r];
                for k in 0..n_in {
                    acc += w[r * n_in + k] * xt[k];
                }
                for k in 0..h {
                    acc += u[r * h + k] * hp[k];
                }
                a[r] = acc;
            }
            let mut hn = vec![0.0; h];
            for j in 0..h {
                let (i, f, g, o) = (sig(a[j]), sig(a[h + j]), a[2 * h + j].tanh(), sig(a[3 * h + j]));
                cp[j] = f * cp[j] + i * g;
                hn[j] = o * cp[j].tanh();
            }
            hp = hn;
            out.extend_from_slice(&hp);
        }
        out
    }

    fn to64(t: &Tensor) -> Vec<f64> {
        t.data().iter().map(|&v| v as f64).collect()
    }

    #[test]
    fn zero_parameters_give_zero_hidden() {
        let p = LstmParams::zeros(3, 5);
        let x = Rng::new(1).uniform(-2.0, 2.0, &[7, 3]);
        let (seq, _) = p.forward(&x, &Tensor::zeros(&[5]), &Tensor::zeros(&[5])).unwrap();
        assert!(seq.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_matches_scalar_reference() {
        let mut rng = Rng::new(5);
        let p = LstmParams::init(3, 4, &mut rng);
        let x = rng.uniform(-1.0, 1.0, &[1, 3]);
        let h0 = rng.uniform(-0.5, 0.5, &[4]);
        let c0 = rng.uniform(-0.5, 0.5, &[4]);
        let (seq, _) = p.forward(&x, &h0, &c0).unwrap();
        let reference = reference_forward(
            &to64(&p.w), &to64(&p.u), &to64(&p.b), &to64(&x), 3, 4, &to64(&h0), &to64(&c0),
        );
        for (a, b) in seq.data().iter().zip(&reference) {
            assert!((*a as f64 - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_inputs_after_reset_give_identical_outputs() {
        let mut rng = Rng::new(6);
        let p = LstmParams::init(2, 3, &mut rng);
        let step = rng.uniform(-1.0, 1.0, &[1, 2]);
        let z = Tensor::zeros(&[3]);
        let (a, _) = p.forward(&step, &z, &z).unwrap();
        let (b, _) = p.forward(&step, &z, &z).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_errors_name_the_dimension() {
        let p = LstmParams::zeros(3, 2);
        let err = p
            .forward(&Tensor::zeros(&[4, 5]), &Tensor::zeros(&[2]), &Tensor::zeros(&[2]))
            .unwrap_err();
        match err {
            Error::Shape { dimension, expected, actual, .. } => {
                assert_eq!(dimension, "input size");
                assert_eq!((expected, actual), (3, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = p
            .forward(&Tensor::zeros(&[4, 3]), &Tensor::zeros(&[3]), &Tensor::zeros(&[2]))
            .unwrap_err();
        assert!(matches!(err, Error::Shape { dimension: "h0 length", .. }));
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let mut rng = Rng::new(8);
        let p = LstmParams::init(2, 3, &mut rng);
        let x = rng.uniform(-1.0, 1.0, &[4, 2]);
        let z = Tensor::zeros(&[3]);
        let (_, cache) = p.forward(&x, &z, &z).unwrap();
        let (g, gx, gh, gc) = p.backward(&cache, &Tensor::zeros(&[4, 3])).unwrap();
        for t in [&g.w, &g.u, &g.b, &gx, &gh, &gc] {
            assert!(t.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn repeated_input_matches_explicit_repetition() {
        let mut rng = Rng::new(9);
        let p = LstmParams::init(4, 3, &mut rng);
        let (steps, batch) = (5, 2);
        let z = rng.uniform(-1.0, 1.0, &[batch, 4]);
        let mut explicit = Vec::new();
        for _ in 0..steps {
            explicit.extend_from_slice(z.data());
        }
        let a = p.forward_batch(SeqInput::Repeated(z.data()), steps, batch, None, None).unwrap();
        let b = p.forward_batch(SeqInput::PerStep(&explicit), steps, batch, None, None).unwrap();
        for (x, y) in a.hidden_seq().iter().zip(b.hidden_seq()) {
            assert!((x - y).abs() < 1e-6);
        }
        let gh = rng.uniform(-1.0, 1.0, &[steps * batch, 3]);
        let ga = p.backward_batch(&a, gh.data(), BackwardOptions::ALL).unwrap();
        let gb = p.backward_batch(&b, gh.data(), BackwardOptions::ALL).unwrap();
        let (pa, pb) = (ga.grads.unwrap(), gb.grads.unwrap());
        for (x, y) in pa.w.data().iter().zip(pb.w.data()) {
            assert!((x - y).abs() < 1e-5);
        }
        // the repeated input gradient is the step-sum of the explicit one
        for r in 0..batch {
            for k in 0..4 {
                let sum: f32 = (0..steps).map(|t| gb.grad_input[(t * batch + r) * 4 + k]).sum();
                assert!((ga.grad_input[r * 4 + k] - sum).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn batch_rows_are_independent() {
        let mut rng = Rng::new(10);
        let p = LstmParams::init(1, 6, &mut rng);
        let (steps, batch) = (8, 3);
        let x = rng.uniform(-1.0, 1.0, &[steps * batch]);
        let full = p.forward_batch(SeqInput::PerStep(x.data()), steps, batch, None, None).unwrap();
        for r in 0..batch {
            let single: Vec<f32> = (0..steps).map(|t| x.data()[t * batch + r]).collect();
            let one = p.forward_batch(SeqInput::PerStep(&single), steps, 1, None, None).unwrap();
            for t in 0..steps {
                assert_eq!(
                    &full.hidden_seq()[(t * batch + r) * 6..(t * batch + r + 1) * 6],
                    &one.hidden_seq()[t * 6..(t + 1) * 6]
                );
            }
        }
    }
}
