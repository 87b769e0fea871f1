use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use log::{debug, warn};

use crate::data::{Window, WindowLabel};
use crate::error::{Error, Result};
use crate::model::{Discriminator, Generator};
use crate::nn::loss::sign;
use crate::nn::rng::derive_seed;
use crate::nn::{AdamConfig, AdamState, BackwardOptions, Rng, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    /// Weight of the discriminator-feature term.
    pub lambda: f64,
    pub steps: usize,
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub restarts: usize,
    /// Standard deviation of the initial latent draw.
    pub latent_std: f32,
    pub seed: u64,
    /// Windows inverted together in one batched pass.
    pub batch_size: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            lambda: 0.1,
            steps: 300,
            learning_rate: 1e-2,
            beta1: 0.5,
            beta2: 0.999,
            restarts: 1,
            latent_std: 0.1,
            seed: 0,
            batch_size: 64,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        if self.steps == 0 || self.restarts == 0 || self.batch_size == 0 {
            return Err(Error::Config("inversion steps, restarts and batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.latent_std > 0.0) {
            return Err(Error::Config("inversion learning rate and latent std must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWindow {
    pub building_id: Arc<str>,
    pub start_index: usize,
    pub label: WindowLabel,
    pub z_star: Vec<f32>,
    /// Sum of absolute differences between the window and its reconstruction.
    pub r: f64,
    /// Sum of absolute differences between discriminator hidden states.
    pub f: f64,
    pub s: f64,
}

#[derive(Clone)]
struct Best {
    r: f64,
    f: f64,
    s: f64,
    z: Vec<f32>,
}

fn window_seed(seed: u64, w: &Window, restart: usize, attempt: usize) -> u64 {
    derive_seed(
        seed,
        &[
            b"invert",
            w.building_id.as_bytes(),
            &(w.start_index as u64).to_le_bytes(),
            &(restart as u64).to_le_bytes(),
            &(attempt as u64).to_le_bytes(),
        ],
    )
}

/// Optimizes one latent code per window in lockstep. Rows never interact,
/// so each window's result is independent of the rest of the batch. A
/// `None` entry means the objective went non-finite.
fn run_lockstep(
    gen: &Generator,
    disc: &Discriminator,
    windows: &[&Window],
    cfg: &InversionConfig,
    restart: usize,
    attempt: usize,
) -> Result<Vec<Option<Best>>> {
    let b = windows.len();
    let t_len = gen.window_len;
    let latent = gen.latent_dim;
    let h = disc.hidden_size();
    let lambda = cfg.lambda;
    let mut x = Vec::with_capacity(b * t_len);
    for w in windows {
        x.extend_from_slice(&w.values);
    }
    let fx = disc.forward_batch(&x, t_len, b)?.features().to_vec();

    let mut z = Tensor::zeros(&[b, latent]);
    for (row, w) in windows.iter().enumerate() {
        let mut rng = Rng::new(window_seed(cfg.seed, w, restart, attempt));
        rng.fill_gaussian(0.0, cfg.latent_std, &mut z.data_mut()[row * latent..(row + 1) * latent]);
    }
    let mut adam = AdamState::for_params(
        AdamConfig {
            alpha: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: 1e-8,
        },
        &[&z],
    );
    let mut best: Vec<Option<Best>> = vec![None; b];
    let mut failed = vec![false; b];
    let mut r = vec![0.0f64; b];
    let mut f = vec![0.0f64; b];

    for k in 0..=cfg.steps {
        let g_cache = gen.forward_batch(z.data(), b)?;
        let y = g_cache.windows();
        let d_cache = disc.forward_batch(&y, t_len, b)?;
        let fy = d_cache.features();

        r.iter_mut().for_each(|v| *v = 0.0);
        f.iter_mut().for_each(|v| *v = 0.0);
        for row in 0..b {
            let span = row * t_len..(row + 1) * t_len;
            r[row] = x[span.clone()]
                .iter()
                .zip(&y[span])
                .map(|(a, c)| (a - c).abs() as f64)
                .sum();
        }
        // features are time-major: ((t * b) + row) * h
        for t in 0..t_len {
            for row in 0..b {
                let off = (t * b + row) * h;
                f[row] += fx[off..off + h]
                    .iter()
                    .zip(&fy[off..off + h])
                    .map(|(a, c)| (a - c).abs() as f64)
                    .sum::<f64>();
            }
        }
        for row in 0..b {
            if failed[row] {
                continue;
            }
            let s = (1.0 - lambda) * r[row] + lambda * f[row];
            if !s.is_finite() {
                failed[row] = true;
                best[row] = None;
                continue;
            }
            if best[row].as_ref().is_none_or(|cur| s < cur.s) {
                best[row] = Some(Best {
                    r: r[row],
                    f: f[row],
                    s,
                    z: z.data()[row * latent..(row + 1) * latent].to_vec(),
                });
            }
        }
        if k == cfg.steps || failed.iter().all(|&x| x) {
            break;
        }

        let mut grad_y = vec![0.0f32; b * t_len];
        if lambda > 0.0 {
            let grad_feat: Vec<f32> = fy
                .iter()
                .zip(&fx)
                .map(|(a, c)| lambda as f32 * sign(a - c))
                .collect();
            let (_, gy) = disc.backward_batch(
                &d_cache,
                &vec![0.0; b],
                Some(&grad_feat),
                BackwardOptions {
                    param_grads: false,
                    input_grads: true,
                },
            )?;
            grad_y = gy;
        }
        let w_res = (1.0 - lambda) as f32;
        for ((g, yv), xv) in grad_y.iter_mut().zip(&y).zip(&x) {
            *g += w_res * sign(yv - xv);
        }
        let (_, grad_z) = gen.backward_batch(&g_cache, &grad_y, false)?;
        let mut grad_z = Tensor::from_vec(&[b, latent], grad_z)?;
        for (row, &bad) in failed.iter().enumerate() {
            if bad {
                grad_z.data_mut()[row * latent..(row + 1) * latent].fill(0.0);
            }
        }
        adam.step_one(&mut z, &grad_z)?;
    }
    Ok(best)
}

fn check_window(gen: &Generator, w: &Window) -> Result<()> {
    if w.values.len() != gen.window_len {
        return Err(Error::shape("invert", "window length", gen.window_len, w.values.len()));
    }
    if !w.values.iter().all(|v| v.is_finite()) {
        return Err(Error::Data(format!(
            "window {}@{} contains non-finite values",
            w.building_id, w.start_index
        )));
    }
    Ok(())
}

fn score_chunk(gen: &Generator, disc: &Discriminator, chunk: &[&Window], cfg: &InversionConfig) -> Result<Vec<ScoredWindow>> {
    let mut overall: Vec<Option<Best>> = vec![None; chunk.len()];
    for restart in 0..cfg.restarts {
        let mut results = run_lockstep(gen, disc, chunk, cfg, restart, 0)?;
        let retry: Vec<usize> = (0..chunk.len()).filter(|&i| results[i].is_none()).collect();
        if !retry.is_empty() {
            warn!("{} windows hit a non-finite objective; retrying from fresh latent draws", retry.len());
            let subset: Vec<&Window> = retry.iter().map(|&i| chunk[i]).collect();
            let again = run_lockstep(gen, disc, &subset, cfg, restart, 1)?;
            for (&i, res) in retry.iter().zip(again) {
                match res {
                    Some(b) => results[i] = Some(b),
                    None => {
                        let w = chunk[i];
                        return Err(Error::Numeric(format!(
                            "inversion objective is non-finite for window {}@{} after a retry",
                            w.building_id, w.start_index
                        )));
                    }
                }
            }
        }
        for (slot, res) in overall.iter_mut().zip(results) {
            let res = res.expect("failures handled above");
            if slot.as_ref().is_none_or(|cur| res.s < cur.s) {
                *slot = Some(res);
            }
        }
    }
    Ok(chunk
        .iter()
        .zip(overall)
        .map(|(w, b)| {
            let b = b.expect("at least one restart");
            ScoredWindow {
                building_id: w.building_id.clone(),
                start_index: w.start_index,
                label: w.label,
                z_star: b.z,
                r: b.r,
                f: b.f,
                s: b.s,
            }
        })
        .collect())
}

/// Scores a single window.
pub fn invert(gen: &Generator, disc: &Discriminator, x: &Window, cfg: &InversionConfig) -> Result<ScoredWindow> {
    cfg.validate()?;
    check_window(gen, x)?;
    Ok(score_chunk(gen, disc, &[x], cfg)?.remove(0))
}

/// Score of `x` against the reconstruction `G(z)` for a fixed latent code,
/// without any optimization. Returns `(R, F, S)`.
pub fn score_at(gen: &Generator, disc: &Discriminator, x: &Window, z: &[f32], lambda: f64) -> Result<(f64, f64, f64)> {
    check_window(gen, x)?;
    if z.len() != gen.latent_dim {
        return Err(Error::shape("score_at", "latent dimension", gen.latent_dim, z.len()));
    }
    let t_len = gen.window_len;
    let y = gen.forward_batch(z, 1)?.windows().to_vec();
    let fx = disc.forward_batch(&x.values, t_len, 1)?.features().to_vec();
    let fy = disc.forward_batch(&y, t_len, 1)?.features().to_vec();
    let r: f64 = x.values.iter().zip(&y).map(|(a, c)| (a - c).abs() as f64).sum();
    let f: f64 = fx.iter().zip(&fy).map(|(a, c)| (a - c).abs() as f64).sum();
    Ok((r, f, (1.0 - lambda) * r + lambda * f))
}

/// Scores every window, in input order. Work is split into chunks of
/// `cfg.batch_size` shared by up to `threads` workers (0 or 1 runs inline);
/// scores do not depend on chunking, ordering or thread count.
pub fn score_batch(
    gen: &Generator,
    disc: &Discriminator,
    windows: &[Window],
    cfg: &InversionConfig,
    threads: usize,
) -> Result<Vec<ScoredWindow>> {
    cfg.validate()?;
    for w in windows {
        check_window(gen, w)?;
    }
    let refs: Vec<&Window> = windows.iter().collect();
    let chunks: Vec<&[&Window]> = refs.chunks(cfg.batch_size).collect();
    let total = chunks.len();
    if threads <= 1 || total <= 1 {
        let mut out = Vec::with_capacity(windows.len());
        for (i, c) in chunks.iter().enumerate() {
            out.extend(score_chunk(gen, disc, c, cfg)?);
            debug!("inverted chunk {}/{total}", i + 1);
        }
        return Ok(out);
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Vec<ScoredWindow>>>>> = Mutex::new((0..total).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.min(total) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let res = score_chunk(gen, disc, chunks[i], cfg);
                let stop = res.is_err();
                slots.lock().expect("worker panicked")[i] = Some(res);
                if stop {
                    next.store(total, Ordering::Relaxed);
                }
            });
        }
    });
    let mut out = Vec::with_capacity(windows.len());
    for slot in slots.into_inner().expect("worker panicked") {
        match slot {
            Some(res) => out.extend(res?),
            None => return Err(Error::Numeric("inversion stopped after a failure".into())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny() -> (Generator, Discriminator) {
        ModelConfig {
            latent_dim: 4,
            window_len: 8,
            gen_hidden: vec![5, 6],
            disc_hidden: 5,
        }
        .init(&mut Rng::new(21))
    }

    fn window(id: &str, start: usize, seed: u64) -> Window {
        Window {
            building_id: Arc::from(id),
            start_index: start,
            values: Rng::new(seed).uniform(-0.8, 0.8, &[8]).into_vec(),
            label: WindowLabel::Normal,
        }
    }

    fn cfg(steps: usize) -> InversionConfig {
        InversionConfig {
            steps,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn score_is_the_weighted_sum() {
        let (g, d) = tiny();
        let s = invert(&g, &d, &window("a", 0, 1), &cfg(20)).unwrap();
        assert!(s.r >= 0.0 && s.f >= 0.0);
        assert!((s.s - (0.9 * s.r + 0.1 * s.f)).abs() < 1e-6);
        let mut c = cfg(20);
        c.lambda = 0.0;
        let s0 = invert(&g, &d, &window("a", 0, 1), &c).unwrap();
        assert_eq!(s0.s, s0.r);
    }

    #[test]
    fn more_steps_never_hurt() {
        let (g, d) = tiny();
        let w = window("a", 3, 2);
        let one = invert(&g, &d, &w, &cfg(1)).unwrap();
        let many = invert(&g, &d, &w, &cfg(60)).unwrap();
        assert!(many.s <= one.s);
    }

    #[test]
    fn models_are_not_mutated() {
        let (g, d) = tiny();
        let (g0, d0) = (g.clone(), d.clone());
        score_batch(&g, &d, &[window("a", 0, 1), window("b", 0, 2)], &cfg(5), 1).unwrap();
        assert_eq!(g, g0);
        assert_eq!(d, d0);
    }

    #[test]
    fn order_chunking_and_threads_do_not_change_scores() {
        let (g, d) = tiny();
        let ws: Vec<Window> = (0..7).map(|i| window(&format!("b{}", i % 3), i * 8, i as u64)).collect();
        let mut c = cfg(10);
        c.batch_size = 7;
        let base = score_batch(&g, &d, &ws, &c, 1).unwrap();
        let mut rev = ws.clone();
        rev.reverse();
        c.batch_size = 3;
        let mut other = score_batch(&g, &d, &rev, &c, 3).unwrap();
        other.reverse();
        assert_eq!(base, other);
        assert!(score_batch(&g, &d, &[], &c, 2).unwrap().is_empty());
    }

    #[test]
    fn score_at_reproduces_the_optimum() {
        let (g, d) = tiny();
        let w = window("a", 0, 3);
        let s = invert(&g, &d, &w, &cfg(5)).unwrap();
        let (r, f, total) = score_at(&g, &d, &w, &s.z_star, 0.1).unwrap();
        assert!((r - s.r).abs() <= 1e-9 * s.r.max(1.0));
        assert!((f - s.f).abs() <= 1e-9 * s.f.max(1.0));
        assert!((total - s.s).abs() <= 1e-9 * s.s.max(1.0));
        assert!(score_at(&g, &d, &w, &[0.0], 0.1).is_err());
    }

    #[test]
    fn restarts_take_the_minimum() {
        let (g, d) = tiny();
        let w = window("a", 0, 9);
        let single = invert(&g, &d, &w, &cfg(5)).unwrap();
        let mut c = cfg(5);
        c.restarts = 3;
        let multi = invert(&g, &d, &w, &c).unwrap();
        assert!(multi.s <= single.s);
    }

    #[test]
    fn rejects_bad_lambda_and_length() {
        let (g, d) = tiny();
        let mut c = cfg(5);
        c.lambda = 1.5;
        assert!(matches!(invert(&g, &d, &window("a", 0, 1), &c), Err(Error::Config(_))));
        let mut w = window("a", 0, 1);
        w.values.pop();
        assert!(matches!(invert(&g, &d, &w, &cfg(5)), Err(Error::Shape { .. })));
    }
}
