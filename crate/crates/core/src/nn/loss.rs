//! Scalar losses with gradients.

use crate::error::{ensure_dim, Error, Result};

/// Clamp applied to probabilities before taking logarithms.
pub const BCE_EPS: f32 = 1e-7;

/// Mean binary cross-entropy and its gradient with respect to `predictions`.
///
/// Predictions are clamped to `[BCE_EPS, 1 - BCE_EPS]` before the log, so the
/// loss is finite for any input. Targets must be exactly 0 or 1.
pub fn bce_loss(predictions: &[f32], targets: &[f32]) -> Result<(f32, Vec<f32>)> {
    ensure_dim("bce_loss", "targets", predictions.len(), targets.len())?;
    if predictions.is_empty() {
        return Err(Error::Data("bce_loss: empty batch".into()));
    }
    check_targets(targets)?;
    let n = predictions.len() as f64;
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(predictions.len());
    for (&p, &t) in predictions.iter().zip(targets) {
        let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS) as f64;
        let t = t as f64;
        total -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
        grad.push(((-t / pc + (1.0 - t) / (1.0 - pc)) / n) as f32);
    }
    Ok(((total / n) as f32, grad))
}

/// Mean BCE evaluated from logits, returning the gradient with respect to the
/// logits. The loss value uses the same clamp as [`bce_loss`]; the gradient is
/// the exact `(sigmoid(logit) - target) / n`.
pub fn bce_with_logits(logits: &[f32], targets: &[f32]) -> Result<(f32, Vec<f32>, Vec<f32>)> {
    ensure_dim("bce_with_logits", "targets", logits.len(), targets.len())?;
    if logits.is_empty() {
        return Err(Error::Data("bce_with_logits: empty batch".into()));
    }
    check_targets(targets)?;
    let n = logits.len() as f64;
    let probs: Vec<f32> = logits.iter().map(|&x| super::activation::sigmoid(x)).collect();
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (&p, &t) in probs.iter().zip(targets) {
        let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS) as f64;
        let t64 = t as f64;
        total -= t64 * pc.ln() + (1.0 - t64) * (1.0 - pc).ln();
        grad.push(((p as f64 - t64) / n) as f32);
    }
    Ok(((total / n) as f32, grad, probs))
}

fn check_targets(targets: &[f32]) -> Result<()> {
    match targets.iter().position(|&t| t != 0.0 && t != 1.0) {
        Some(i) => Err(Error::Data(format!(
            "bce target at index {i} is {}, expected 0 or 1",
            targets[i]
        ))),
        None => Ok(()),
    }
}

/// Sum of absolute differences and its subgradient with respect to `a`
/// (zero at exact ties).
pub fn l1_loss(a: &[f32], b: &[f32]) -> Result<(f32, Vec<f32>)> {
    ensure_dim("l1_loss", "length", a.len(), b.len())?;
    let mut total = 0.0f64;
    let grad = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            total += d.abs() as f64;
            sign(d)
        })
        .collect();
    Ok((total as f32, grad))
}

#[inline]
pub(crate) fn sign(d: f32) -> f32 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}
