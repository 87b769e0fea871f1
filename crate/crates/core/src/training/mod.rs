//! Adversarial training of the generator/discriminator pair on normal
//! windows.

mod log;
mod state;

pub use self::log::{stability_report, EpochRecord, IterRecord, StabilityReport, TrainLog, ACCURACY_BAND};
pub use state::TrainState;

use ::log::{info, warn};

use crate::data::{Window, WindowLabel};
use crate::error::{Error, Result};
use crate::model::{Discriminator, Generator};
use crate::nn::loss::bce_with_logits;
use crate::nn::{AdamConfig, AdamState, BackwardOptions, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Real plus fake windows per discriminator update; half of each.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub latent_std: f32,
    pub seed: u64,
    /// Checkpoint after every this many epochs (and always after the last);
    /// 0 checkpoints only at the end.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            adam: AdamConfig::default(),
            latent_std: 0.1,
            seed: 0,
            checkpoint_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn half_batch(&self) -> usize {
        self.batch_size / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 || self.batch_size % 2 != 0 {
            return Err(Error::Config(format!(
                "batch size must be even and at least 2, got {}",
                self.batch_size
            )));
        }
        if !(self.latent_std > 0.0 && self.latent_std.is_finite()) {
            return Err(Error::Config(format!("latent std must be positive, got {}", self.latent_std)));
        }
        let a = self.adam;
        if !(a.alpha >= 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(Error::Config(format!("invalid Adam settings {a:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub d_loss: f32,
    pub g_loss: f32,
    /// Fraction of the discriminator batch classified correctly before its
    /// update.
    pub d_accuracy: f32,
}

/// One discriminator update on `real` (batch-major `[half, T]`) against fresh
/// fakes, then one generator update on another fresh batch.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    gen: &mut Generator,
    disc: &mut Discriminator,
    adam_g: &mut AdamState,
    adam_d: &mut AdamState,
    real: &[f32],
    half: usize,
    latent_std: f32,
    rng: &mut Rng,
) -> Result<StepResult> {
    let steps = gen.window_len;
    let latent = gen.latent_dim;
    let mut z = vec![0.0f32; half * latent];

    // discriminator
    rng.fill_gaussian(0.0, latent_std, &mut z);
    let fake = gen.forward_batch(&z, half)?.windows();
    let mut x = Vec::with_capacity(2 * half * steps);
    x.extend_from_slice(real);
    x.extend_from_slice(&fake);
    let mut targets = vec![1.0f32; half];
    targets.resize(2 * half, 0.0);
    let d_cache = disc.forward_batch(&x, steps, 2 * half)?;
    let (d_loss, grad_logits, probs) = bce_with_logits(d_cache.logits(), &targets)?;
    let correct = probs
        .iter()
        .zip(&targets)
        .filter(|(&p, &t)| if t == 1.0 { p > 0.5 } else { p < 0.5 })
        .count();
    let d_accuracy = correct as f32 / (2 * half) as f32;
    let (d_grads, _) = disc.backward_batch(
        &d_cache,
        &grad_logits,
        None,
        BackwardOptions {
            param_grads: true,
            input_grads: false,
        },
    )?;
    let d_grads = d_grads.expect("parameter gradients requested");
    adam_d.apply(&mut disc.params_mut(), &d_grads.tensors())?;

    // generator
    rng.fill_gaussian(0.0, latent_std, &mut z);
    let g_cache = gen.forward_batch(&z, half)?;
    let fake = g_cache.windows();
    let d_cache = disc.forward_batch(&fake, steps, half)?;
    let (g_loss, grad_logits, _) = bce_with_logits(d_cache.logits(), &vec![1.0; half])?;
    let (_, grad_fake) = disc.backward_batch(
        &d_cache,
        &grad_logits,
        None,
        BackwardOptions {
            param_grads: false,
            input_grads: true,
        },
    )?;
    let (g_grads, _) = gen.backward_batch(&g_cache, &grad_fake, true)?;
    let g_grads = g_grads.expect("parameter gradients requested");
    adam_g.apply(&mut gen.params_mut(), &g_grads.tensors())?;

    Ok(StepResult {
        d_loss,
        g_loss,
        d_accuracy,
    })
}

fn batch_diagnostic(windows: &[&Window], idx: &[usize]) -> String {
    let mut out = String::new();
    for &i in idx {
        let w = windows[i];
        let (lo, hi) = w
            .values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let finite = w.values.iter().all(|v| v.is_finite());
        out.push_str(&format!(
            "\n  {}@{} min={lo} max={hi} finite={finite}",
            w.building_id, w.start_index
        ));
    }
    out
}

/// Runs epochs `state.epochs_done .. cfg.epochs` over the normal windows in
/// `windows`. `checkpoint` is called after each checkpoint epoch with the
/// updated state and the log so far.
pub fn train(
    state: &mut TrainState,
    windows: &[Window],
    cfg: &TrainConfig,
    log: &mut TrainLog,
    mut checkpoint: impl FnMut(&TrainState, &TrainLog) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    if state.epochs_done >= cfg.epochs {
        return Ok(());
    }
    let window_len = state.gen.window_len;
    let normal: Vec<&Window> = windows.iter().filter(|w| w.label == WindowLabel::Normal).collect();
    if normal.len() < windows.len() {
        warn!(
            "skipping {} training windows that are anomalous or unlabeled",
            windows.len() - normal.len()
        );
    }
    if let Some(w) = normal.iter().find(|w| w.values.len() != window_len) {
        return Err(Error::shape("train", "window length", window_len, w.values.len()));
    }
    let half = cfg.half_batch();
    if normal.len() < half {
        return Err(Error::Data(format!(
            "need at least {half} normal training windows, found {}",
            normal.len()
        )));
    }
    let steps_per_epoch = normal.len() / half;
    let mut real = vec![0.0f32; half * window_len];

    for epoch in state.epochs_done..cfg.epochs {
        let mut rng = Rng::derived(cfg.seed, "epoch", epoch as u64);
        let mut order: Vec<usize> = (0..normal.len()).collect();
        rng.shuffle(&mut order);
        let first_record = log.iterations.len();
        for step in 0..steps_per_epoch {
            let idx = &order[step * half..(step + 1) * half];
            for (slot, &i) in idx.iter().enumerate() {
                real[slot * window_len..(slot + 1) * window_len].copy_from_slice(&normal[i].values);
            }
            let r = train_step(
                &mut state.gen,
                &mut state.disc,
                &mut state.adam_g,
                &mut state.adam_d,
                &real,
                half,
                cfg.latent_std,
                &mut rng,
            )?;
            state.iteration += 1;
            if !(r.d_loss.is_finite() && r.g_loss.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {epoch}, iteration {}: L_D={} L_G={}; real batch:{}",
                    state.iteration,
                    r.d_loss,
                    r.g_loss,
                    batch_diagnostic(&normal, idx)
                )));
            }
            log.iterations.push(IterRecord {
                iteration: state.iteration,
                epoch,
                d_loss: r.d_loss,
                g_loss: r.g_loss,
                d_accuracy: r.d_accuracy,
            });
        }
        let record = EpochRecord::summarize(epoch, &log.iterations[first_record..]);
        info!(
            "epoch {}/{}: L_D={:.4} L_G={:.4} D acc={:.3}",
            epoch + 1,
            cfg.epochs,
            record.mean_d_loss,
            record.mean_g_loss,
            record.mean_d_accuracy
        );
        log.epochs.push(record);
        state.epochs_done = epoch + 1;
        let last = epoch + 1 == cfg.epochs;
        let periodic = cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0;
        if last || periodic {
            checkpoint(state, log)?;
        }
    }
    Ok(())
}
