//! Window-level metrics. The positive class is "anomalous" throughout.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Counts verdicts against labels; `None` labels are skipped and counted in
/// the second return value.
pub fn confusion(verdicts: &[bool], labels: &[Option<bool>]) -> Result<(ConfusionMatrix, usize)> {
    if verdicts.len() != labels.len() {
        return Err(Error::shape("confusion", "label count", verdicts.len(), labels.len()));
    }
    let mut cm = ConfusionMatrix::default();
    let mut skipped = 0;
    for (&v, &l) in verdicts.iter().zip(labels) {
        match (v, l) {
            (_, None) => skipped += 1,
            (true, Some(true)) => cm.tp += 1,
            (true, Some(false)) => cm.fp += 1,
            (false, Some(true)) => cm.fn_ += 1,
            (false, Some(false)) => cm.tn += 1,
        }
    }
    Ok((cm, skipped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    /// Names of metrics whose denominator was zero (reported as 0).
    pub undefined: Vec<&'static str>,
}

fn ratio(num: u64, den: u64, name: &'static str, undefined: &mut Vec<&'static str>) -> f64 {
    if den == 0 {
        undefined.push(name);
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let mut undefined = Vec::new();
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy", &mut undefined);
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut undefined);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut undefined);
    // 2PR/(P+R) written on counts
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, "f1", &mut undefined);
    let specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity", &mut undefined);
    Metrics {
        accuracy,
        precision,
        recall,
        f1,
        specificity,
        undefined,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Auc {
    pub value: f64,
    /// False when one class is absent (value reported as 0).
    pub defined: bool,
}

/// Area under the ROC curve by a trapezoidal sweep over descending scores.
/// Tied scores form one diagonal segment, so the area equals the
/// probability that a random anomalous window outscores a random normal
/// one, ties counting one half. Accumulated in integers, so it is exact.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Auc> {
    if scores.len() != labels.len() {
        return Err(Error::shape("roc_auc", "label count", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("roc_auc: NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Ok(Auc {
            value: 0.0,
            defined: false,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    // twice the area, in units of one (1/neg x 1/pos) cell
    let mut area2: u128 = 0;
    let mut tp: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                gp += 1
            } else {
                gn += 1
            }
            i += 1;
        }
        area2 += gn * (2 * tp + gp);
        tp += gp;
    }
    Ok(Auc {
        value: area2 as f64 / (2 * pos * neg) as f64,
        defined: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub auc: Auc,
    pub unlabeled_skipped: usize,
    pub fingerprint: String,
}

impl MetricsReport {
    pub fn build(verdicts: &[bool], scores: &[f64], labels: &[Option<bool>], fingerprint: &str) -> Result<Self> {
        let (confusion, unlabeled_skipped) = confusion(verdicts, labels)?;
        let (s, l): (Vec<f64>, Vec<bool>) = scores
            .iter()
            .zip(labels)
            .filter_map(|(&s, l)| l.map(|l| (s, l)))
            .unzip();
        Ok(MetricsReport {
            metrics: metrics(&confusion),
            auc: roc_auc(&s, &l)?,
            confusion,
            unlabeled_skipped,
            fingerprint: fingerprint.to_string(),
        })
    }
}

/// Plain-text report, `metric,value` CSV and 2x2 confusion CSV. Output is a
/// pure function of the report.
pub fn render_report(r: &MetricsReport) -> (String, String, String) {
    let m = &r.metrics;
    let c = &r.confusion;
    let mut undefined: Vec<&str> = m.undefined.clone();
    if !r.auc.defined {
        undefined.push("roc_auc");
    }
    let mut text = String::new();
    let _ = writeln!(text, "windows evaluated: {}", c.total());
    let _ = writeln!(text, "unlabeled skipped: {}", r.unlabeled_skipped);
    let _ = writeln!(text, "accuracy:    {:.4}", m.accuracy);
    let _ = writeln!(text, "precision:   {:.4}", m.precision);
    let _ = writeln!(text, "recall:      {:.4}", m.recall);
    let _ = writeln!(text, "f1:          {:.4}", m.f1);
    let _ = writeln!(text, "specificity: {:.4}", m.specificity);
    let _ = writeln!(text, "roc_auc:     {:.4}", r.auc.value);
    let _ = writeln!(text, "confusion:   tp={} fp={} fn={} tn={}", c.tp, c.fp, c.fn_, c.tn);
    if !undefined.is_empty() {
        let _ = writeln!(text, "undefined (reported as 0): {}", undefined.join(", "));
    }
    if !r.fingerprint.is_empty() {
        let _ = writeln!(text, "config fingerprint: {}", r.fingerprint);
    }

    let mut csv = String::from("metric,value\n");
    for (k, v) in [
        ("accuracy", m.accuracy),
        ("precision", m.precision),
        ("recall", m.recall),
        ("f1", m.f1),
        ("specificity", m.specificity),
        ("roc_auc", r.auc.value),
    ] {
        let _ = writeln!(csv, "{k},{v}");
    }
    for (k, v) in [("tp", c.tp), ("fp", c.fp), ("fn", c.fn_), ("tn", c.tn)] {
        let _ = writeln!(csv, "{k},{v}");
    }
    let _ = writeln!(csv, "unlabeled_skipped,{}", r.unlabeled_skipped);
    let _ = writeln!(csv, "undefined,{}", undefined.join(";"));
    let _ = writeln!(csv, "config_fingerprint,{}", r.fingerprint);

    let confusion = format!(
        "actual,predicted_anomalous,predicted_normal\nanomalous,{},{}\nnormal,{},{}\n",
        c.tp, c.fn_, c.fp, c.tn
    );
    (text, csv, confusion)
}

/// Writes `report.txt`, `metrics.csv` and `confusion.csv` into `dir`.
pub fn write_report(dir: &Path, r: &MetricsReport) -> Result<()> {
    let (text, csv, confusion) = render_report(r);
    for (name, body) in [("report.txt", text), ("metrics.csv", csv), ("confusion.csv", confusion)] {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(v: &[bool]) -> Vec<Option<bool>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn perfect_verdicts() {
        let labels = [true, true, true, true, true, false, false, false, false, false];
        let (cm, _) = confusion(&labels, &some(&labels)).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (5, 5, 0, 0));
        let m = metrics(&cm);
        assert_eq!([m.accuracy, m.precision, m.recall, m.f1, m.specificity], [1.0; 5]);
    }

    #[test]
    fn all_normal_predictions() {
        let (cm, _) = confusion(&[false; 5], &some(&[true, true, true, false, false])).unwrap();
        assert_eq!(cm.fn_, 3);
        let m = metrics(&cm);
        assert!(m.undefined.contains(&"precision"));
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn eight_window_case() {
        let v = [true, true, false, false, true, false, true, false];
        let l = [Some(true), Some(false), Some(true), Some(false), Some(true), None, Some(false), Some(false)];
        let (cm, skipped) = confusion(&v, &l).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, fp: 2, fn_: 1, tn: 2 });
        assert_eq!(skipped, 1);
    }

    #[test]
    fn arithmetic_example() {
        let m = metrics(&ConfusionMatrix { tp: 88, fp: 12, fn_: 11, tn: 89 });
        assert!((m.precision - 0.88).abs() < 1e-12);
        assert!((m.recall - 88.0 / 99.0).abs() < 1e-12);
        assert!((m.accuracy - 0.885).abs() < 1e-12);
        let f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        assert!((m.f1 - f1).abs() < 1e-12);
    }

    #[test]
    fn separated_auc_and_undefined_auc() {
        let a = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(a.value, 1.0);
        assert!(!roc_auc(&[0.1, 0.2], &[true, true]).unwrap().defined);
        let tied = roc_auc(&[0.5; 4], &[true, false, true, false]).unwrap();
        assert_eq!(tied.value, 0.5);
    }

    #[test]
    fn report_is_deterministic() {
        let r = MetricsReport::build(
            &[true, false, true],
            &[0.9, 0.1, 0.7],
            &[Some(true), Some(false), Some(false)],
            "abc",
        )
        .unwrap();
        assert_eq!(render_report(&r), render_report(&r.clone()));
        let (_, csv, cm) = render_report(&r);
        assert!(csv.starts_with("metric,value\naccuracy,0.6666666666666666\n"));
        assert_eq!(cm, "actual,predicted_anomalous,predicted_normal\nanomalous,1,0\nnormal,1,1\n");
    }
}
