//! INI-style run configuration.
//!
//! ```text
//! seed = 7
//! [data]
//! window_length = 60
//! [train]
//! epochs = 5
//! ```
//!
//! Keys before the first section header belong to `[run]`. Values set on the
//! command line as `section.key=value` override the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{IngestSchema, SplitConfig};
use crate::detection::InversionConfig;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::nn::AdamConfig;
use crate::synth::SynthConfig;
use crate::training::TrainConfig;

/// Parsed `[section] key = value` pairs in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    pub entries: Vec<(String, String, String)>,
}

impl Ini {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut section = String::from("run");
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let err = |m: &str| Error::Config(format!("{source}:{}: {m}", i + 1));
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header"))?.trim();
                if name.is_empty() {
                    return Err(err("empty section name"));
                }
                section = name.to_ascii_lowercase();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(err("empty key"));
            }
            entries.push((section.clone(), k.to_ascii_lowercase(), v.trim().to_string()));
        }
        Ok(Ini { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub schema: IngestSchema,
    pub split: SplitConfig,
    /// Share of buildings held out for testing when no test CSV is given.
    pub test_building_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectSection {
    pub inversion: InversionConfig,
    /// Caps the normal validation windows scored during calibration
    /// (0 scores all of them).
    pub max_validation_normal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub detect: DetectSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data: DataSection {
                train_csv: None,
                test_csv: None,
                schema: IngestSchema::default(),
                split: SplitConfig::default(),
                test_building_fraction: 0.5,
            },
            synth: SynthConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            detect: DetectSection {
                inversion: InversionConfig::default(),
                max_validation_normal: 0,
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Config(format!("invalid value {v:?} for {key}: {e}")))
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64)> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("{key} expects two comma-separated numbers, got {v:?}")))?;
    Ok((parse(key, a.trim())?, parse(key, b.trim())?))
}

fn parse_upair(key: &str, v: &str) -> Result<(usize, usize)> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("{key} expects two comma-separated integers, got {v:?}")))?;
    Ok((parse(key, a.trim())?, parse(key, b.trim())?))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|p| parse(key, p.trim())).collect()
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn pair<T: Display>(p: (T, T)) -> String {
    format!("{},{}", p.0, p.1)
}

impl RunConfig {
    pub fn from_ini(ini: &Ini) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (s, k, v) in &ini.entries {
            cfg.set(s, k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_ini(&Ini::load(path)?)
    }

    /// Applies `section.key=value`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (lhs, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {spec:?} is not section.key=value")))?;
        let (s, k) = lhs.trim().split_once('.').unwrap_or(("run", lhs.trim()));
        self.set(&s.to_ascii_lowercase(), &k.to_ascii_lowercase(), v.trim())
    }

    pub fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let name = format!("{section}.{key}");
        let k = name.as_str();
        let d = &mut self.data;
        let sy = &mut self.synth;
        let t = &mut self.train;
        let inv = &mut self.detect.inversion;
        match (section, key) {
            ("run", "seed") => self.seed = parse(k, v)?,
            ("data", "train_csv") => d.train_csv = opt_path(v),
            ("data", "test_csv") => d.test_csv = opt_path(v),
            ("data", "building_col") => d.schema.building_col = v.into(),
            ("data", "timestamp_col") => d.schema.timestamp_col = v.into(),
            ("data", "reading_col") => d.schema.reading_col = v.into(),
            ("data", "label_col") => d.schema.label_col = (!v.is_empty()).then(|| v.to_string()),
            ("data", "keep_first_duplicate") => d.schema.keep_first_duplicate = parse(k, v)?,
            ("data", "window_length") => d.split.window_length = parse(k, v)?,
            ("data", "holdout_fraction") => d.split.holdout_fraction = parse(k, v)?,
            ("data", "eval_stride") => d.split.eval_stride = parse(k, v)?,
            ("data", "clip") => d.split.clip = parse(k, v)?,
            ("data", "test_building_fraction") => d.test_building_fraction = parse(k, v)?,
            ("synth", "buildings") => sy.n_buildings = parse(k, v)?,
            ("synth", "hours") => sy.hours = parse(k, v)?,
            ("synth", "start_hour") => sy.start_hour = parse(k, v)?,
            ("synth", "level") => sy.level = parse_pair(k, v)?,
            ("synth", "daily_amplitude") => sy.daily_amplitude = parse_pair(k, v)?,
            ("synth", "weekly_amplitude") => sy.weekly_amplitude = parse_pair(k, v)?,
            ("synth", "noise_fraction") => sy.noise_fraction = parse(k, v)?,
            ("synth", "anomaly_rate") => sy.anomaly_rate = parse(k, v)?,
            ("synth", "missing_rate") => sy.missing_rate = parse(k, v)?,
            ("synth", key) => {
                let (arch, field) = key
                    .rsplit_once('_')
                    .ok_or_else(|| Error::Config(format!("unknown key {k}")))?;
                let spec = match arch {
                    "spike" => &mut sy.spike,
                    "drop" => &mut sy.drop,
                    "persistent_shift" => &mut sy.persistent_shift,
                    "oscillation" => &mut sy.oscillation,
                    _ => return Err(Error::Config(format!("unknown key {k}"))),
                };
                match field {
                    "weight" => spec.weight = parse(k, v)?,
                    "duration" => spec.duration = parse_upair(k, v)?,
                    "magnitude" => spec.magnitude = parse_pair(k, v)?,
                    "period" => spec.period = parse_upair(k, v)?,
                    _ => return Err(Error::Config(format!("unknown key {k}"))),
                }
            }
            ("model", "latent_dim") => self.model.latent_dim = parse(k, v)?,
            ("model", "gen_hidden") => self.model.gen_hidden = parse_list(k, v)?,
            ("model", "disc_hidden") => self.model.disc_hidden = parse(k, v)?,
            ("train", "epochs") => t.epochs = parse(k, v)?,
            ("train", "batch_size") => t.batch_size = parse(k, v)?,
            ("train", "alpha") => t.adam.alpha = parse(k, v)?,
            ("train", "beta1") => t.adam.beta1 = parse(k, v)?,
            ("train", "beta2") => t.adam.beta2 = parse(k, v)?,
            ("train", "epsilon") => t.adam.epsilon = parse(k, v)?,
            ("train", "latent_std") => t.latent_std = parse(k, v)?,
            ("train", "checkpoint_every") => t.checkpoint_every = parse(k, v)?,
            ("detect", "lambda") => inv.lambda = parse(k, v)?,
            ("detect", "steps") => inv.steps = parse(k, v)?,
            ("detect", "learning_rate") => inv.learning_rate = parse(k, v)?,
            ("detect", "beta1") => inv.beta1 = parse(k, v)?,
            ("detect", "beta2") => inv.beta2 = parse(k, v)?,
            ("detect", "restarts") => inv.restarts = parse(k, v)?,
            ("detect", "latent_std") => inv.latent_std = parse(k, v)?,
            ("detect", "batch_size") => inv.batch_size = parse(k, v)?,
            ("detect", "max_validation_normal") => self.detect.max_validation_normal = parse(k, v)?,
            _ => return Err(Error::Config(format!("unknown key {k}"))),
        }
        Ok(())
    }

    /// Every key with its current value, grouped by section.
    pub fn entries(&self) -> Vec<(&'static str, &'static str, String)> {
        let d = &self.data;
        let sy = &self.synth;
        let t = &self.train;
        let inv = &self.detect.inversion;
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut e = vec![
            ("run", "seed", self.seed.to_string()),
            ("data", "train_csv", path(&d.train_csv)),
            ("data", "test_csv", path(&d.test_csv)),
            ("data", "building_col", d.schema.building_col.clone()),
            ("data", "timestamp_col", d.schema.timestamp_col.clone()),
            ("data", "reading_col", d.schema.reading_col.clone()),
            ("data", "label_col", d.schema.label_col.clone().unwrap_or_default()),
            ("data", "keep_first_duplicate", d.schema.keep_first_duplicate.to_string()),
            ("data", "window_length", d.split.window_length.to_string()),
            ("data", "holdout_fraction", d.split.holdout_fraction.to_string()),
            ("data", "eval_stride", d.split.eval_stride.to_string()),
            ("data", "clip", d.split.clip.to_string()),
            ("data", "test_building_fraction", d.test_building_fraction.to_string()),
            ("synth", "buildings", sy.n_buildings.to_string()),
            ("synth", "hours", sy.hours.to_string()),
            ("synth", "start_hour", sy.start_hour.to_string()),
            ("synth", "level", pair(sy.level)),
            ("synth", "daily_amplitude", pair(sy.daily_amplitude)),
            ("synth", "weekly_amplitude", pair(sy.weekly_amplitude)),
            ("synth", "noise_fraction", sy.noise_fraction.to_string()),
            ("synth", "anomaly_rate", sy.anomaly_rate.to_string()),
            ("synth", "missing_rate", sy.missing_rate.to_string()),
        ];
        for (keys, spec) in [
            (["spike_weight", "spike_duration", "spike_magnitude", "spike_period"], &sy.spike),
            (["drop_weight", "drop_duration", "drop_magnitude", "drop_period"], &sy.drop),
            (
                [
                    "persistent_shift_weight",
                    "persistent_shift_duration",
                    "persistent_shift_magnitude",
                    "persistent_shift_period",
                ],
                &sy.persistent_shift,
            ),
            (
                ["oscillation_weight", "oscillation_duration", "oscillation_magnitude", "oscillation_period"],
                &sy.oscillation,
            ),
        ] {
            e.push(("synth", keys[0], spec.weight.to_string()));
            e.push(("synth", keys[1], pair(spec.duration)));
            e.push(("synth", keys[2], pair(spec.magnitude)));
            e.push(("synth", keys[3], pair(spec.period)));
        }
        let hidden: Vec<String> = self.model.gen_hidden.iter().map(|h| h.to_string()).collect();
        e.extend([
            ("model", "latent_dim", self.model.latent_dim.to_string()),
            ("model", "gen_hidden", hidden.join(",")),
            ("model", "disc_hidden", self.model.disc_hidden.to_string()),
            ("train", "epochs", t.epochs.to_string()),
            ("train", "batch_size", t.batch_size.to_string()),
            ("train", "alpha", t.adam.alpha.to_string()),
            ("train", "beta1", t.adam.beta1.to_string()),
            ("train", "beta2", t.adam.beta2.to_string()),
            ("train", "epsilon", t.adam.epsilon.to_string()),
            ("train", "latent_std", t.latent_std.to_string()),
            ("train", "checkpoint_every", t.checkpoint_every.to_string()),
            ("detect", "lambda", inv.lambda.to_string()),
            ("detect", "steps", inv.steps.to_string()),
            ("detect", "learning_rate", inv.learning_rate.to_string()),
            ("detect", "beta1", inv.beta1.to_string()),
            ("detect", "beta2", inv.beta2.to_string()),
            ("detect", "restarts", inv.restarts.to_string()),
            ("detect", "latent_std", inv.latent_std.to_string()),
            ("detect", "batch_size", inv.batch_size.to_string()),
            ("detect", "max_validation_normal", self.detect.max_validation_normal.to_string()),
        ]);
        e
    }

    /// Fully resolved configuration in the same INI format.
    pub fn to_ini(&self) -> String {
        let mut grouped: BTreeMap<usize, (&str, Vec<(&str, String)>)> = BTreeMap::new();
        let order = ["run", "data", "synth", "model", "train", "detect"];
        for (s, k, v) in self.entries() {
            let idx = order.iter().position(|&o| o == s).expect("known section");
            grouped.entry(idx).or_insert((s, Vec::new())).1.push((k, v));
        }
        let mut out = String::new();
        for (_, (section, keys)) in grouped {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in keys {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.data.split;
        if s.window_length == 0 || s.eval_stride == 0 {
            return Err(Error::Config("window_length and eval_stride must be positive".into()));
        }
        if !(s.clip > 0.0 && s.clip.is_finite()) {
            return Err(Error::Config(format!("clip must be positive, got {}", s.clip)));
        }
        if !(0.0..1.0).contains(&s.holdout_fraction) || !(0.0..1.0).contains(&self.data.test_building_fraction) {
            return Err(Error::Config("holdout_fraction and test_building_fraction must be in [0, 1)".into()));
        }
        if self.model.latent_dim == 0 || self.model.disc_hidden == 0 || self.model.gen_hidden.iter().any(|&h| h == 0) || self.model.gen_hidden.is_empty() {
            return Err(Error::Config("model sizes must be positive".into()));
        }
        self.train_config().validate()?;
        self.inversion_config().validate()?;
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            window_len: self.data.split.window_length,
            ..self.model.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn inversion_config(&self) -> InversionConfig {
        InversionConfig {
            seed: self.seed,
            ..self.detect.inversion.clone()
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        self.train.adam
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let ini = Ini::parse("seed = 3\n# c\n[Train]\nepochs=4\n; c\n[detect]\nlambda = 0.2\n", "t").unwrap();
        let cfg = RunConfig::from_ini(&ini).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.train.epochs, 4);
        assert_eq!(cfg.detect.inversion.lambda, 0.2);
        assert_eq!(cfg.train_config().seed, 3);
    }

    #[test]
    fn errors_name_the_line_or_key() {
        let e = Ini::parse("[data\n", "f.ini").unwrap_err();
        assert!(e.to_string().contains("f.ini:1"), "{e}");
        let e = RunConfig::from_ini(&Ini::parse("[train]\nepoch = 3\n", "f").unwrap()).unwrap_err();
        assert!(e.to_string().contains("train.epoch"), "{e}");
        let e = RunConfig::from_ini(&Ini::parse("[train]\nepochs = many\n", "f").unwrap()).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("train.epochs=5").unwrap();
        cfg.apply_override("seed=9").unwrap();
        cfg.apply_override("synth.spike_magnitude=7,9").unwrap();
        cfg.apply_override("data.train_csv=/tmp/x.csv").unwrap();
        cfg.apply_override("data.label_col=").unwrap();
        cfg.apply_override("model.gen_hidden=8,9").unwrap();
        let text = cfg.to_ini();
        let back = RunConfig::from_ini(&Ini::parse(&text, "r").unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_ini(), text);
        assert!(cfg.apply_override("nonsense").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("detect.lambda=2").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(RunConfig::default().validate().is_ok());
    }
}
