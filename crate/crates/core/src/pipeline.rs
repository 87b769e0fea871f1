//! End-to-end stages working on an output directory. Each stage reads the
//! artifacts of the previous ones from the same directory:
//!
//! ```text
//! corpus.csv                   synth
//! windows/{train,validation,test}.mgwd, windows/buildings.csv
//!                              preprocess
//! checkpoints/epoch-NNNN.glsm, checkpoints/latest.glsm,
//! train_log.csv, stability.txt train
//! validation_scores.csv, checkpoints/threshold.txt
//!                              calibrate
//! scores.csv                   detect
//! report.txt, metrics.csv, confusion.csv
//!                              evaluate
//! plots/*.svg                  plot
//! <stage>.resolved.ini         every stage
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::data::{self, ingest_csv, read_windows, write_windows, BuildingSeries, Window, WindowLabel};
use crate::detection::{self, calibrate_threshold, classify, score_batch, ScoreRow, Threshold};
use crate::error::{Error, Result};
use crate::evaluation::{write_report, MetricsReport};
use crate::model::{CheckpointConfig, ModelCheckpoint};
use crate::nn::Rng;
use crate::plot;
use crate::synth::generate_corpus;
use crate::training::{self, stability_report, StabilityReport, TrainLog, TrainState};

/// Artifact paths under one output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.csv")
    }
    pub fn events(&self) -> PathBuf {
        self.root.join("corpus_events.csv")
    }
    pub fn windows_dir(&self) -> PathBuf {
        self.root.join("windows")
    }
    pub fn windows(&self, split: &str) -> PathBuf {
        self.windows_dir().join(format!("{split}.mgwd"))
    }
    pub fn buildings(&self) -> PathBuf {
        self.windows_dir().join("buildings.csv")
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }
    pub fn latest(&self) -> PathBuf {
        self.checkpoints().join("latest.glsm")
    }
    pub fn epoch_checkpoint(&self, epoch: usize) -> PathBuf {
        self.checkpoints().join(format!("epoch-{epoch:04}.glsm"))
    }
    pub fn threshold(&self) -> PathBuf {
        self.checkpoints().join("threshold.txt")
    }
    pub fn train_log(&self) -> PathBuf {
        self.root.join("train_log.csv")
    }
    pub fn stability(&self) -> PathBuf {
        self.root.join("stability.txt")
    }
    pub fn validation_scores(&self) -> PathBuf {
        self.root.join("validation_scores.csv")
    }
    pub fn scores(&self) -> PathBuf {
        self.root.join("scores.csv")
    }
    pub fn plots(&self) -> PathBuf {
        self.root.join("plots")
    }
    pub fn resolved(&self, stage: &str) -> PathBuf {
        self.root.join(format!("{stage}.resolved.ini"))
    }
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write(p: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(p, body).map_err(|e| Error::io(p, e))
}

fn begin(cfg: &RunConfig, layout: &Layout, stage: &str) -> Result<()> {
    cfg.validate()?;
    mkdir(&layout.root)?;
    write(&layout.resolved(stage), cfg.to_ini())
}

/// Short hex digest of the resolved configuration.
pub fn fingerprint(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_ini().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn checkpoint_config(cfg: &RunConfig) -> CheckpointConfig {
    CheckpointConfig {
        latent_dim: cfg.model.latent_dim as u32,
        window_length: cfg.data.split.window_length as u32,
        clip_c: cfg.data.split.clip,
        seed: cfg.seed,
    }
}

pub fn run_synth(cfg: &RunConfig, layout: &Layout) -> Result<PathBuf> {
    begin(cfg, layout, "synth")?;
    let corpus = generate_corpus(&cfg.synth_config())?;
    corpus.write_csv(&layout.corpus())?;
    let mut events = String::from("building_id,archetype,start_index,length,magnitude\n");
    for e in &corpus.events {
        let _ = writeln!(
            events,
            "{},{},{},{},{}",
            corpus.series[e.building].building_id,
            e.archetype.name(),
            e.start,
            e.len,
            e.magnitude
        );
    }
    write(&layout.events(), events)?;
    info!(
        "synthesized {} buildings x {} hours, {:.2}% anomalous hours",
        corpus.series.len(),
        cfg.synth.hours,
        100.0 * corpus.anomaly_fraction()
    );
    Ok(layout.corpus())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub train_buildings: usize,
    pub test_buildings: usize,
    pub train_windows: usize,
    pub validation_normal: usize,
    pub validation_anomalous: usize,
    pub test_windows: usize,
}

fn building_rows(out: &mut String, role: &str, series: &[BuildingSeries]) {
    for s in series {
        let st = s.stats.unwrap_or(data::NormStats { mu: 0.0, sigma: 1.0 });
        let _ = writeln!(
            out,
            "{},{role},{},{},{},{}",
            s.building_id,
            data::format_hour(s.start_hour),
            s.len(),
            st.mu,
            st.sigma
        );
    }
}

pub fn run_preprocess(cfg: &RunConfig, layout: &Layout) -> Result<PreprocessSummary> {
    begin(cfg, layout, "preprocess")?;
    let train_csv = cfg.data.train_csv.clone().unwrap_or_else(|| layout.corpus());
    if !train_csv.exists() {
        return Err(Error::Config(format!(
            "training CSV {} not found; set data.train_csv or run synth first",
            train_csv.display()
        )));
    }
    let all = ingest_csv(&train_csv, &cfg.data.schema)?;
    let (mut train_b, mut test_b) = match &cfg.data.test_csv {
        Some(p) => (all, ingest_csv(p, &cfg.data.schema)?),
        None => data::split_buildings(all, cfg.data.test_building_fraction, &mut Rng::derived(cfg.seed, "buildings", 0))?,
    };
    if train_b.is_empty() {
        return Err(Error::Data("no training buildings".into()));
    }
    let missing: usize = train_b.iter().chain(&test_b).map(|s| s.missing()).sum();
    if missing > 0 {
        info!("imputing {missing} missing readings");
    }
    let mut split = data::split_dataset(&mut train_b, &cfg.data.split, &mut Rng::derived(cfg.seed, "split", 0))?;
    split.test = data::test_windows(&mut test_b, &cfg.data.split)?;
    let l = cfg.data.split.window_length;
    mkdir(&layout.windows_dir())?;
    write_windows(&layout.windows("train"), l, &split.train)?;
    write_windows(&layout.windows("validation"), l, &split.validation)?;
    write_windows(&layout.windows("test"), l, &split.test)?;
    let mut rows = String::from("building_id,role,start,hours,mu,sigma\n");
    building_rows(&mut rows, "train", &train_b);
    building_rows(&mut rows, "test", &test_b);
    write(&layout.buildings(), rows)?;
    let va = split.validation_anomalous();
    let summary = PreprocessSummary {
        train_buildings: train_b.len(),
        test_buildings: test_b.len(),
        train_windows: split.train.len(),
        validation_normal: split.validation.len() - va,
        validation_anomalous: va,
        test_windows: split.test.len(),
    };
    info!("{summary:?}");
    Ok(summary)
}

fn load_windows(layout: &Layout, split: &str, cfg: &RunConfig) -> Result<Vec<Window>> {
    let path = layout.windows(split);
    if !path.exists() {
        return Err(Error::Config(format!("{} not found; run preprocess first", path.display())));
    }
    let (l, windows) = read_windows(&path)?;
    if l != cfg.data.split.window_length {
        return Err(Error::Config(format!(
            "{} holds {l}-hour windows but window_length is {}",
            path.display(),
            cfg.data.split.window_length
        )));
    }
    Ok(windows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub iterations: u64,
    pub stability: StabilityReport,
}

pub fn run_train(cfg: &RunConfig, layout: &Layout, resume: bool) -> Result<TrainSummary> {
    begin(cfg, layout, "train")?;
    let windows = load_windows(layout, "train", cfg)?;
    let tcfg = cfg.train_config();
    let expected = checkpoint_config(cfg);
    let (mut state, mut log) = if resume && layout.latest().exists() {
        let ckpt = ModelCheckpoint::load_expecting(&layout.latest(), &expected)?;
        let state = TrainState::from_checkpoint(&ckpt, tcfg.adam)?;
        if state.model_config() != cfg.model_config() {
            return Err(Error::Config(format!(
                "checkpoint architecture {:?} differs from the configured {:?}",
                state.model_config(),
                cfg.model_config()
            )));
        }
        let mut log = if layout.train_log().exists() {
            TrainLog::load(&layout.train_log())?
        } else {
            TrainLog::default()
        };
        log.truncate_to_epoch(state.epochs_done);
        info!("resuming after epoch {}", state.epochs_done);
        (state, log)
    } else {
        (TrainState::new(&cfg.model_config(), tcfg.adam, cfg.seed), TrainLog::default())
    };
    mkdir(&layout.checkpoints())?;
    training::train(&mut state, &windows, &tcfg, &mut log, |s, log| {
        let ckpt = s.to_checkpoint(expected.clip_c, expected.seed);
        let bytes = ckpt.encode();
        write(&layout.epoch_checkpoint(s.epochs_done), &bytes)?;
        write(&layout.latest(), &bytes)?;
        log.save(&layout.train_log())
    })?;
    if !layout.latest().exists() {
        // zero epochs: still leave a loadable checkpoint behind
        state.to_checkpoint(expected.clip_c, expected.seed).save(&layout.latest())?;
        log.save(&layout.train_log())?;
    }
    let stability = stability_report(&log);
    write(&layout.stability(), stability.render())?;
    if !stability.band_violations.is_empty() {
        warn!(
            "discriminator accuracy left [0.5, 0.9] in epochs {:?}",
            stability.band_violations
        );
    }
    Ok(TrainSummary {
        epochs: state.epochs_done,
        iterations: state.iteration,
        stability,
    })
}

fn load_models(cfg: &RunConfig, layout: &Layout) -> Result<(crate::model::Generator, crate::model::Discriminator)> {
    let path = layout.latest();
    if !path.exists() {
        return Err(Error::Config(format!("{} not found; run train first", path.display())));
    }
    let ckpt = ModelCheckpoint::load_expecting(&path, &checkpoint_config(cfg))?;
    let found = ckpt.model_config()?;
    if found != cfg.model_config() {
        return Err(Error::Config(format!(
            "checkpoint architecture {:?} differs from the configured {:?}",
            found,
            cfg.model_config()
        )));
    }
    Ok((ckpt.generator()?, ckpt.discriminator()?))
}

/// Deterministic subset of at most `cap` normal windows (all anomalous ones
/// are kept).
pub fn cap_validation(windows: Vec<Window>, cap: usize, seed: u64) -> Vec<Window> {
    let (mut normal, other): (Vec<Window>, Vec<Window>) =
        windows.into_iter().partition(|w| w.label == WindowLabel::Normal);
    if cap == 0 || normal.len() <= cap {
        normal.extend(other);
        return normal;
    }
    normal.sort_by(|a, b| a.key().cmp(&b.key()));
    Rng::derived(seed, "validation-cap", 0).shuffle(&mut normal);
    normal.truncate(cap);
    normal.sort_by(|a, b| a.key().cmp(&b.key()));
    normal.extend(other);
    normal
}

pub fn run_calibrate(cfg: &RunConfig, layout: &Layout, threads: usize) -> Result<Threshold> {
    begin(cfg, layout, "calibrate")?;
    let (gen, disc) = load_models(cfg, layout)?;
    let windows = cap_validation(
        load_windows(layout, "validation", cfg)?,
        cfg.detect.max_validation_normal,
        cfg.seed,
    );
    info!("scoring {} validation windows", windows.len());
    let inv = cfg.inversion_config();
    let scored = score_batch(&gen, &disc, &windows, &inv, threads)?;
    let threshold = calibrate_threshold(&scored)?;
    let verdicts = classify(&scored.iter().map(|s| s.s).collect::<Vec<_>>(), threshold.tau);
    let rows: Vec<ScoreRow> = scored
        .iter()
        .zip(verdicts)
        .map(|(s, v)| ScoreRow::from_scored(s, Some(v)))
        .collect();
    detection::write_scores(&layout.validation_scores(), &rows)?;
    mkdir(&layout.checkpoints())?;
    detection::write_threshold(&layout.threshold(), &threshold, inv.lambda)?;
    info!("threshold tau={} (validation F1 {:.4})", threshold.tau, threshold.f1);
    Ok(threshold)
}

pub fn run_detect(cfg: &RunConfig, layout: &Layout, threads: usize) -> Result<Vec<ScoreRow>> {
    begin(cfg, layout, "detect")?;
    let (gen, disc) = load_models(cfg, layout)?;
    if !layout.threshold().exists() {
        return Err(Error::Config(format!(
            "{} not found; run calibrate first",
            layout.threshold().display()
        )));
    }
    let (threshold, lambda) = detection::read_threshold(&layout.threshold())?;
    let inv = cfg.inversion_config();
    if lambda.is_finite() && lambda != inv.lambda {
        warn!("threshold was calibrated with lambda={lambda} but detect uses lambda={}", inv.lambda);
    }
    let windows = load_windows(layout, "test", cfg)?;
    info!("scoring {} test windows", windows.len());
    let scored = score_batch(&gen, &disc, &windows, &inv, threads)?;
    let verdicts = classify(&scored.iter().map(|s| s.s).collect::<Vec<_>>(), threshold.tau);
    let rows: Vec<ScoreRow> = scored
        .iter()
        .zip(verdicts)
        .map(|(s, v)| ScoreRow::from_scored(s, Some(v)))
        .collect();
    detection::write_scores(&layout.scores(), &rows)?;
    Ok(rows)
}

pub fn evaluate_rows(rows: &[ScoreRow], fingerprint: &str) -> Result<MetricsReport> {
    let mut verdicts = Vec::with_capacity(rows.len());
    for r in rows {
        verdicts.push(r.anomalous.ok_or_else(|| {
            Error::Data(format!("window {}@{} has no verdict", r.building_id, r.start_index))
        })?);
    }
    let scores: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let labels: Vec<Option<bool>> = rows.iter().map(|r| r.label.is_anomalous()).collect();
    MetricsReport::build(&verdicts, &scores, &labels, fingerprint)
}

pub fn run_evaluate(cfg: &RunConfig, layout: &Layout) -> Result<MetricsReport> {
    begin(cfg, layout, "evaluate")?;
    if !layout.scores().exists() {
        return Err(Error::Config(format!("{} not found; run detect first", layout.scores().display())));
    }
    let rows = detection::read_scores(&layout.scores())?;
    let report = evaluate_rows(&rows, &fingerprint(cfg))?;
    write_report(&layout.root, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOptions {
    /// Plot only these buildings (all test buildings when empty).
    pub buildings: Vec<String>,
    /// Sample range `[from, to]` for a zoomed view.
    pub range: Option<(usize, usize)>,
}

/// Reassembles per-building series from stored windows.
fn series_from_windows(windows: &[Window]) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for w in windows {
        let s = out.entry(w.building_id.to_string()).or_default();
        let end = w.start_index + w.values.len();
        if s.len() < end {
            s.resize(end, f64::NAN);
        }
        for (i, &v) in w.values.iter().enumerate() {
            s[w.start_index + i] = v as f64;
        }
    }
    out
}

fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn run_plot(cfg: &RunConfig, layout: &Layout, opts: &PlotOptions) -> Result<Vec<PathBuf>> {
    begin(cfg, layout, "plot")?;
    mkdir(&layout.plots())?;
    let mut written = Vec::new();
    let windows = load_windows(layout, "test", cfg)?;
    let rows = if layout.scores().exists() {
        detection::read_scores(&layout.scores())?
    } else {
        Vec::new()
    };
    let l = cfg.data.split.window_length;
    let mut detected: BTreeMap<String, Vec<plot::Span>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.anomalous == Some(true)) {
        detected
            .entry(r.building_id.to_string())
            .or_default()
            .push((r.start_index, r.start_index + l));
    }
    let mut truth: BTreeMap<String, Vec<plot::Span>> = BTreeMap::new();
    for w in windows.iter().filter(|w| w.label == WindowLabel::Anomalous) {
        truth
            .entry(w.building_id.to_string())
            .or_default()
            .push((w.start_index, w.start_index + l));
    }
    let series = series_from_windows(&windows);
    for want in &opts.buildings {
        if !series.contains_key(want) {
            return Err(Error::Config(format!("building {want:?} is not among the test buildings")));
        }
    }
    let suffix = opts.range.map_or(String::new(), |(a, b)| format!("_{a}-{b}"));
    for (id, values) in &series {
        if !opts.buildings.is_empty() && !opts.buildings.contains(id) {
            continue;
        }
        let svg = plot::series_svg(
            &format!("Building {id}"),
            values,
            detected.get(id).map_or(&[][..], |v| v),
            truth.get(id).map_or(&[][..], |v| v),
            opts.range,
        );
        let path = layout.plots().join(format!("series_{}{suffix}.svg", safe_name(id)));
        write(&path, svg)?;
        written.push(path);
    }
    if layout.train_log().exists() {
        let path = layout.plots().join("training_loss.svg");
        write(&path, plot::loss_svg(&TrainLog::load(&layout.train_log())?))?;
        written.push(path);
    }
    if !rows.is_empty() && rows.iter().all(|r| r.anomalous.is_some()) {
        let report = evaluate_rows(&rows, "")?;
        let path = layout.plots().join("confusion.svg");
        write(&path, plot::confusion_svg(&report.confusion))?;
        written.push(path);
    }
    Ok(written)
}

/// Every stage in order; synthesizes a corpus when no training CSV is set.
pub fn run_all(cfg: &RunConfig, layout: &Layout, threads: usize) -> Result<MetricsReport> {
    if cfg.data.train_csv.is_none() {
        run_synth(cfg, layout)?;
    }
    run_preprocess(cfg, layout)?;
    run_train(cfg, layout, false)?;
    run_calibrate(cfg, layout, threads)?;
    run_detect(cfg, layout, threads)?;
    run_evaluate(cfg, layout)
}
