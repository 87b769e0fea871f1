//! Meter data: CSV ingestion, gap filling, per-building scaling, windowing,
//! splits and the binary window store.

mod ingest;
mod series;
mod split;
mod store;
mod window;

pub use ingest::{format_hour, ingest_csv, ingest_reader, parse_hour, IngestSchema, MAX_SERIES_HOURS};
pub use series::{
    compute_stats, denormalize, impute, normalize, squash, unsquash, ImputeReport, NormStats, DEFAULT_CLIP,
    SIGMA_FLOOR,
};
pub use split::{split_buildings, split_dataset, test_windows, DatasetSplit, SplitConfig};
pub use store::{decode_windows, encode_windows, read_windows, write_windows, WINDOW_STORE_VERSION};
pub use window::{make_windows, window_count, Window, WindowLabel};

/// One building's hourly readings on a gapless grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSeries {
    pub building_id: String,
    /// Hours since the Unix epoch (UTC) of `readings[0]`.
    pub start_hour: i64,
    /// `NaN` marks a missing reading until [`impute`] runs.
    pub readings: Vec<f64>,
    pub labels: Option<Vec<u8>>,
    /// Set by [`normalize`].
    pub stats: Option<NormStats>,
}

impl BuildingSeries {
    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn missing(&self) -> usize {
        self.readings.iter().filter(|v| v.is_nan()).count()
    }

    pub fn anomalous_hours(&self) -> usize {
        self.labels.as_ref().map_or(0, |l| l.iter().filter(|&&v| v == 1).count())
    }
}

/// Impute, normalize and squash a raw series. Returns the squashed values.
pub fn prepare(series: &mut BuildingSeries, clip: f32) -> Vec<f32> {
    impute(series);
    normalize(series);
    squash(&series.readings, clip)
}
