use log::warn;

use super::window::{make_windows, Window, WindowLabel};
use super::{prepare, BuildingSeries};
use crate::error::{Error, Result};
use crate::nn::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub window_length: usize,
    pub holdout_fraction: f64,
    /// Stride of the anomalous validation windows and of test windows.
    pub eval_stride: usize,
    pub clip: f32,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            window_length: 60,
            holdout_fraction: 0.10,
            eval_stride: 60,
            clip: super::DEFAULT_CLIP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Window>,
    pub validation: Vec<Window>,
    pub test: Vec<Window>,
}

impl DatasetSplit {
    pub fn validation_anomalous(&self) -> usize {
        self.validation.iter().filter(|w| w.label == WindowLabel::Anomalous).count()
    }
}

/// Normal stride-1 windows of the training buildings are shuffled and a
/// `holdout_fraction` share goes to validation, together with every
/// anomalous window at `eval_stride`. Series are prepared in place.
/// `test` is left empty.
pub fn split_dataset(buildings: &mut [BuildingSeries], config: &SplitConfig, rng: &mut Rng) -> Result<DatasetSplit> {
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::Config(format!(
            "holdout fraction must be in [0, 1), got {}",
            config.holdout_fraction
        )));
    }
    let mut normal = Vec::new();
    let mut anomalous = Vec::new();
    for b in buildings.iter_mut() {
        if b.labels.is_none() {
            warn!("training building {} has no labels; treating every hour as normal", b.building_id);
        }
        let labels = b.labels.clone().unwrap_or_else(|| vec![0; b.len()]);
        let values = prepare(b, config.clip);
        for w in make_windows(&b.building_id, &values, Some(&labels), config.window_length, 1)? {
            if w.label == WindowLabel::Normal {
                normal.push(w);
            }
        }
        anomalous.extend(
            make_windows(&b.building_id, &values, Some(&labels), config.window_length, config.eval_stride)?
                .into_iter()
                .filter(|w| w.label == WindowLabel::Anomalous),
        );
    }
    // canonical order first so the result never depends on input order
    normal.sort_by(|a, b| a.key().cmp(&b.key()));
    anomalous.sort_by(|a, b| a.key().cmp(&b.key()));
    rng.shuffle(&mut normal);
    let held = (normal.len() as f64 * config.holdout_fraction).round() as usize;
    let train = normal.split_off(held);
    let mut validation = normal;
    validation.sort_by(|a, b| a.key().cmp(&b.key()));
    if anomalous.is_empty() {
        warn!("no anomalous windows in the training buildings; threshold calibration will be degenerate");
    }
    validation.extend(anomalous);
    Ok(DatasetSplit {
        train,
        validation,
        test: Vec::new(),
    })
}

/// Windows at `eval_stride` over each prepared test building.
pub fn test_windows(buildings: &mut [BuildingSeries], config: &SplitConfig) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for b in buildings.iter_mut() {
        let values = prepare(b, config.clip);
        out.extend(make_windows(
            &b.building_id,
            &values,
            b.labels.as_deref(),
            config.window_length,
            config.eval_stride,
        )?);
    }
    Ok(out)
}

/// Partitions buildings into (train, test) by a seeded shuffle of the
/// sorted ids. `test_fraction` is rounded to a whole number of buildings.
pub fn split_buildings(
    mut buildings: Vec<BuildingSeries>,
    test_fraction: f64,
    rng: &mut Rng,
) -> Result<(Vec<BuildingSeries>, Vec<BuildingSeries>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test building fraction must be in [0, 1), got {test_fraction}")));
    }
    buildings.sort_by(|a, b| a.building_id.cmp(&b.building_id));
    rng.shuffle(&mut buildings);
    let n_test = (buildings.len() as f64 * test_fraction).round() as usize;
    let n_test = n_test.min(buildings.len().saturating_sub(1));
    let test = buildings.split_off(buildings.len() - n_test);
    let mut train = buildings;
    train.sort_by(|a, b| a.building_id.cmp(&b.building_id));
    let mut test = test;
    test.sort_by(|a, b| a.building_id.cmp(&b.building_id));
    Ok((train, test))
}
