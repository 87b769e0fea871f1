use log::warn;

use super::BuildingSeries;

/// Standard deviations below this are treated as zero.
pub const SIGMA_FLOOR: f64 = 1e-8;
/// Default clip level for [`squash`], in standard deviations.
pub const DEFAULT_CLIP: f32 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mu: f64,
    /// Population standard deviation, replaced by 1 for (near-)constant series.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImputeReport {
    pub filled: usize,
    /// Nothing to fill from: every reading was missing.
    pub all_missing: bool,
}

/// Forward fill, then backward fill for a leading gap. An all-missing series
/// is left as is (it becomes zeros in [`normalize`]).
pub fn impute(series: &mut BuildingSeries) -> ImputeReport {
    let values = &mut series.readings;
    let mut filled = 0;
    let mut last: Option<f64> = None;
    for v in values.iter_mut() {
        if v.is_nan() {
            if let Some(prev) = last {
                *v = prev;
                filled += 1;
            }
        } else {
            last = Some(*v);
        }
    }
    let Some(first_valid) = values.iter().position(|v| !v.is_nan()) else {
        warn!(
            "building {}: every reading is missing; series will normalize to zeros",
            series.building_id
        );
        return ImputeReport {
            filled: 0,
            all_missing: !values.is_empty(),
        };
    };
    let head = values[first_valid];
    for v in &mut values[..first_valid] {
        *v = head;
        filled += 1;
    }
    ImputeReport {
        filled,
        all_missing: false,
    }
}

/// Per-building z-score with population standard deviation. Any reading
/// still missing afterwards is set to zero.
pub fn normalize(series: &mut BuildingSeries) -> NormStats {
    let stats = compute_stats(&series.readings);
    for v in series.readings.iter_mut() {
        *v = if v.is_nan() { 0.0 } else { (*v - stats.mu) / stats.sigma };
    }
    series.stats = Some(stats);
    stats
}

pub fn compute_stats(values: &[f64]) -> NormStats {
    let finite: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if finite.is_empty() {
        return NormStats { mu: 0.0, sigma: 1.0 };
    }
    let n = finite.len() as f64;
    let mu = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    NormStats {
        mu,
        sigma: if sigma < SIGMA_FLOOR { 1.0 } else { sigma },
    }
}

pub fn denormalize(values: &[f64], stats: NormStats) -> Vec<f64> {
    values.iter().map(|v| v * stats.sigma + stats.mu).collect()
}

/// Clips z-scores to `[-clip, clip]` and rescales into `[-1, 1]`.
pub fn squash(values: &[f64], clip: f32) -> Vec<f32> {
    let c = clip as f64;
    values.iter().map(|&v| (v.clamp(-c, c) / c) as f32).collect()
}

pub fn unsquash(values: &[f32], clip: f32) -> Vec<f64> {
    values.iter().map(|&v| v as f64 * clip as f64).collect()
}
