use mguard_core::config::RunConfig;
use mguard_core::data::{read_windows, WindowLabel};
use mguard_core::detection::{read_scores, read_threshold};
use mguard_core::model::{CheckpointConfig, ModelCheckpoint};
use mguard_core::pipeline::{self, Layout, PlotOptions};
use mguard_core::training::TrainLog;
use mguard_core::{Error, FormatError};

fn tiny(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    for kv in [
        "synth.buildings=6",
        "synth.hours=360",
        "synth.anomaly_rate=0.03",
        "model.latent_dim=5",
        "model.gen_hidden=3,4,6",
        "model.disc_hidden=5",
        "train.epochs=2",
        "detect.steps=15",
    ] {
        cfg.apply_override(kv).unwrap();
    }
    cfg
}

#[test]
fn tiny_run_produces_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(5);
    let layout = Layout::new(dir.path());
    let report = pipeline::run_all(&cfg, &layout, 1).unwrap();

    let (l, train) = read_windows(&layout.windows("train")).unwrap();
    assert_eq!(l, 60);
    assert!(!train.is_empty());
    assert!(train.iter().all(|w| w.label == WindowLabel::Normal));
    let (_, test) = read_windows(&layout.windows("test")).unwrap();
    assert!(test.iter().all(|w| w.start_index % 60 == 0));

    let rows = read_scores(&layout.scores()).unwrap();
    assert_eq!(rows.len(), test.len());
    let (threshold, lambda) = read_threshold(&layout.threshold()).unwrap();
    assert_eq!(lambda, 0.1);
    for r in &rows {
        assert!((r.s - (0.9 * r.r + 0.1 * r.f)).abs() < 1e-9 * r.s.abs().max(1.0));
        assert_eq!(r.anomalous, Some(r.s >= threshold.tau));
    }
    let cm = &report.confusion;
    assert_eq!((cm.tp + cm.fp + cm.fn_ + cm.tn) as usize, rows.len());

    let log = TrainLog::load(&layout.train_log()).unwrap();
    assert_eq!(log.epochs.len(), 2);
    for e in 1..=2 {
        assert!(layout.epoch_checkpoint(e).is_file());
    }
    assert_eq!(
        std::fs::read(layout.epoch_checkpoint(2)).unwrap(),
        std::fs::read(layout.latest()).unwrap()
    );

    let written = pipeline::run_plot(&cfg, &layout, &PlotOptions::default()).unwrap();
    assert!(written.iter().any(|p| p.ends_with("training_loss.svg")));
    assert!(written.iter().any(|p| p.ends_with("confusion.svg")));
}

#[test]
fn stages_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(1);
    let layout = Layout::new(dir.path());
    assert!(matches!(pipeline::run_preprocess(&cfg, &layout), Err(Error::Config(_))));
    assert!(matches!(pipeline::run_train(&cfg, &layout, false), Err(Error::Config(_))));
    assert!(matches!(pipeline::run_calibrate(&cfg, &layout, 1), Err(Error::Config(_))));
    assert!(matches!(pipeline::run_detect(&cfg, &layout, 1), Err(Error::Config(_))));
    assert!(matches!(pipeline::run_evaluate(&cfg, &layout), Err(Error::Config(_))));
}

#[test]
fn checkpoint_file_round_trip_and_config_guard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(2);
    let layout = Layout::new(dir.path());
    pipeline::run_synth(&cfg, &layout).unwrap();
    pipeline::run_preprocess(&cfg, &layout).unwrap();
    pipeline::run_train(&cfg, &layout, false).unwrap();

    let ck = ModelCheckpoint::load(&layout.latest()).unwrap();
    let copy = dir.path().join("copy.glsm");
    ck.save(&copy).unwrap();
    let back = ModelCheckpoint::load(&copy).unwrap();
    assert_eq!(back.tensors.len(), ck.tensors.len());
    for ((na, a), (nb, b)) in ck.tensors.iter().zip(&back.tensors) {
        assert_eq!(na, nb);
        assert_eq!(a.dims(), b.dims());
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    let expect48 = CheckpointConfig {
        window_length: 48,
        ..ck.config
    };
    match ModelCheckpoint::load_expecting(&copy, &expect48) {
        Err(Error::Format(FormatError::ConfigMismatch { field, .. })) => assert_eq!(field, "window_length"),
        other => panic!("expected a config mismatch, got {other:?}"),
    }

    // a different model shape in the config is refused at calibration time
    let mut other = cfg.clone();
    other.apply_override("model.disc_hidden=7").unwrap();
    assert!(matches!(pipeline::run_calibrate(&other, &layout, 1), Err(Error::Config(_))));
}
