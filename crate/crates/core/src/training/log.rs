use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Discriminator accuracy range considered healthy.
pub const ACCURACY_BAND: (f64, f64) = (0.5, 0.9);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iteration: u64,
    pub epoch: usize,
    pub d_loss: f32,
    pub g_loss: f32,
    pub d_accuracy: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_d_loss: f64,
    pub mean_g_loss: f64,
    /// Mean of the per-iteration accuracies of the epoch.
    pub mean_d_accuracy: f64,
    /// Accuracy on the epoch's last batch.
    pub last_d_accuracy: f64,
}

impl EpochRecord {
    pub fn summarize(epoch: usize, records: &[IterRecord]) -> Self {
        let n = records.len().max(1) as f64;
        let mean = |f: fn(&IterRecord) -> f32| records.iter().map(|r| f(r) as f64).sum::<f64>() / n;
        EpochRecord {
            epoch,
            mean_d_loss: mean(|r| r.d_loss),
            mean_g_loss: mean(|r| r.g_loss),
            mean_d_accuracy: mean(|r| r.d_accuracy),
            last_d_accuracy: records.last().map_or(0.0, |r| r.d_accuracy as f64),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub iterations: Vec<IterRecord>,
    pub epochs: Vec<EpochRecord>,
}

const HEADER: &str = "iteration,epoch,d_loss,g_loss,d_accuracy";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.iterations {
            let _ = writeln!(out, "{},{},{},{},{}", r.iteration, r.epoch, r.d_loss, r.g_loss, r.d_accuracy);
        }
        out
    }

    /// Parses [`TrainLog::to_csv`] output and rebuilds the epoch summaries.
    pub fn from_csv(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => {
                return Err(Error::Parse {
                    path: source.into(),
                    line: 1,
                    message: format!("expected header {HEADER:?}"),
                })
            }
        }
        let mut log = TrainLog::default();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: source.into(),
                line: i as u64 + 1,
                message,
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f32>().map_err(|_| err(format!("invalid number {s:?}")));
            log.iterations.push(IterRecord {
                iteration: f[0].parse().map_err(|_| err(format!("invalid iteration {:?}", f[0])))?,
                epoch: f[1].parse().map_err(|_| err(format!("invalid epoch {:?}", f[1])))?,
                d_loss: num(f[2])?,
                g_loss: num(f[3])?,
                d_accuracy: num(f[4])?,
            });
        }
        log.rebuild_epochs();
        Ok(log)
    }

    pub fn rebuild_epochs(&mut self) {
        self.epochs.clear();
        let mut start = 0;
        while start < self.iterations.len() {
            let epoch = self.iterations[start].epoch;
            let end = start + self.iterations[start..].iter().take_while(|r| r.epoch == epoch).count();
            self.epochs.push(EpochRecord::summarize(epoch, &self.iterations[start..end]));
            start = end;
        }
    }

    /// Drops records from epochs at or after `epoch`.
    pub fn truncate_to_epoch(&mut self, epoch: usize) {
        self.iterations.retain(|r| r.epoch < epoch);
        self.rebuild_epochs();
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub epochs: usize,
    /// Least-squares slope of the per-epoch mean generator loss.
    pub g_loss_trend: f64,
    pub d_loss_min: f64,
    pub d_loss_max: f64,
    /// Epochs whose mean discriminator accuracy lies outside [`ACCURACY_BAND`].
    pub band_violations: Vec<usize>,
    pub final_mean_d_accuracy: f64,
    pub final_last_batch_d_accuracy: f64,
}

impl StabilityReport {
    pub fn final_in_band(&self) -> bool {
        self.epochs > 0 && (ACCURACY_BAND.0..=ACCURACY_BAND.1).contains(&self.final_mean_d_accuracy)
    }

    /// `key=value` lines.
    pub fn render(&self) -> String {
        let violations: Vec<String> = self.band_violations.iter().map(|e| e.to_string()).collect();
        format!(
            "epochs={}\ng_loss_trend={}\nd_loss_min={}\nd_loss_max={}\naccuracy_band={},{}\nband_violations={}\nfinal_mean_d_accuracy={}\nfinal_last_batch_d_accuracy={}\nfinal_in_band={}\n",
            self.epochs,
            self.g_loss_trend,
            self.d_loss_min,
            self.d_loss_max,
            ACCURACY_BAND.0,
            ACCURACY_BAND.1,
            violations.join(","),
            self.final_mean_d_accuracy,
            self.final_last_batch_d_accuracy,
            self.final_in_band(),
        )
    }
}

pub fn stability_report(log: &TrainLog) -> StabilityReport {
    let n = log.epochs.len();
    let g_loss_trend = if n < 2 {
        0.0
    } else {
        let xm = (n - 1) as f64 / 2.0;
        let ym = log.epochs.iter().map(|e| e.mean_g_loss).sum::<f64>() / n as f64;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, e) in log.epochs.iter().enumerate() {
            sxy += (i as f64 - xm) * (e.mean_g_loss - ym);
            sxx += (i as f64 - xm).powi(2);
        }
        sxy / sxx
    };
    let d = log.epochs.iter().map(|e| e.mean_d_loss);
    let band_violations = log
        .epochs
        .iter()
        .filter(|e| !(ACCURACY_BAND.0..=ACCURACY_BAND.1).contains(&e.mean_d_accuracy))
        .map(|e| e.epoch)
        .collect();
    let last = log.epochs.last();
    StabilityReport {
        epochs: n,
        g_loss_trend,
        d_loss_min: d.clone().fold(f64::INFINITY, f64::min),
        d_loss_max: d.fold(f64::NEG_INFINITY, f64::max),
        band_violations,
        final_mean_d_accuracy: last.map_or(0.0, |e| e.mean_d_accuracy),
        final_last_batch_d_accuracy: last.map_or(0.0, |e| e.last_d_accuracy),
    }
}
