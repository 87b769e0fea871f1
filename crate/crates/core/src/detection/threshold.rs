use std::cmp::Ordering;

use log::warn;

use super::ScoredWindow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub tau: f64,
    /// Validation F1 at `tau`.
    pub f1: f64,
    pub candidates: usize,
    /// Every validation score was identical.
    pub degenerate: bool,
}

/// F1 as an exact fraction `2tp / (2tp + fp + fn)`.
#[derive(Debug, Clone, Copy)]
struct Frac {
    num: u64,
    den: u64,
}

impl Frac {
    fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Frac {
            num: 2 * tp,
            den: 2 * tp + fp + fn_,
        }
    }

    fn cmp(self, other: Frac) -> Ordering {
        // 0/0 counts as zero
        let a = self.num as u128 * other.den.max(1) as u128;
        let b = other.num as u128 * self.den.max(1) as u128;
        a.cmp(&b)
    }

    fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

/// F1 of the rule `score >= tau`, positive class anomalous.
pub fn f1_at(scores: &[f64], labels: &[bool], tau: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= tau, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    Frac::new(tp, fp, fn_).value()
}

/// Verdict per score: anomalous iff `score >= tau`.
pub fn classify(scores: &[f64], tau: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= tau).collect()
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    // keep the candidate strictly above `a` so it separates the two scores
    if m > a && m <= b {
        m
    } else {
        b
    }
}

/// Picks the F1-maximizing threshold among the midpoints of consecutive
/// distinct scores and the two infinite sentinels. Ties go to the largest
/// threshold.
pub fn calibrate_scores(scores: &[f64], labels: &[bool]) -> Result<Threshold> {
    if scores.len() != labels.len() {
        return Err(Error::shape("calibrate_threshold", "label count", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("validation scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Data(format!(
            "threshold calibration needs both normal and anomalous validation windows \
             (found {negatives} normal, {positives} anomalous); supply labeled data containing anomalies"
        )));
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // distinct values ascending with (positives, negatives) at each value
    let mut groups: Vec<(f64, u64, u64)> = Vec::new();
    for (s, l) in pairs {
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if l {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, l as u64, (!l) as u64)),
        }
    }
    let degenerate = groups.len() == 1;
    if degenerate {
        warn!("all validation scores are identical; the threshold cannot separate any windows");
    }
    // Walk thresholds from +inf downwards: each step admits one more group.
    let mut best_tau = f64::INFINITY;
    let mut best = Frac::new(0, 0, positives);
    let (mut tp, mut fp) = (0u64, 0u64);
    for i in (0..groups.len()).rev() {
        tp += groups[i].1;
        fp += groups[i].2;
        let tau = if i == 0 {
            f64::NEG_INFINITY
        } else {
            midpoint(groups[i - 1].0, groups[i].0)
        };
        let f = Frac::new(tp, fp, positives - tp);
        // strict: an equal F1 at a smaller tau never replaces a larger one
        if f.cmp(best) == Ordering::Greater {
            best = f;
            best_tau = tau;
        }
    }
    Ok(Threshold {
        tau: best_tau,
        f1: best.value(),
        candidates: groups.len() + 1,
        degenerate,
    })
}

/// Calibrates on the labeled windows of `validation`; unlabeled ones are
/// ignored.
pub fn calibrate_threshold(validation: &[ScoredWindow]) -> Result<Threshold> {
    let (scores, labels): (Vec<f64>, Vec<bool>) = validation
        .iter()
        .filter_map(|w| w.label.is_anomalous().map(|l| (w.s, l)))
        .unzip();
    calibrate_scores(&scores, &labels)
}
