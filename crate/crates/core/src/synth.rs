//! Synthetic hourly meter corpus with injected, labeled anomalies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::{format_hour, BuildingSeries};
use crate::error::{Error, Result};
use crate::nn::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Archetype {
    /// Upward jump of `magnitude` base-curve standard deviations.
    Spike,
    /// Consumption reduced by a `magnitude` fraction.
    Drop,
    /// Level multiplied by `1 +/- magnitude` for days.
    PersistentShift,
    /// Square wave of `magnitude` base-curve standard deviations.
    Oscillation,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::Spike,
        Archetype::Drop,
        Archetype::PersistentShift,
        Archetype::Oscillation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Spike => "spike",
            Archetype::Drop => "drop",
            Archetype::PersistentShift => "persistent_shift",
            Archetype::Oscillation => "oscillation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchetypeSpec {
    /// Relative frequency among injected events.
    pub weight: f64,
    /// Inclusive range of event length in hours.
    pub duration: (usize, usize),
    pub magnitude: (f64, f64),
    /// Square-wave period range in hours (oscillation only).
    pub period: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_buildings: usize,
    pub hours: usize,
    /// Hours since the Unix epoch of the first reading.
    pub start_hour: i64,
    pub seed: u64,
    pub level: (f64, f64),
    pub daily_amplitude: (f64, f64),
    pub weekly_amplitude: (f64, f64),
    /// Noise standard deviation as a fraction of the building's level.
    pub noise_fraction: f64,
    /// Fraction of all hours labeled anomalous.
    pub anomaly_rate: f64,
    pub spike: ArchetypeSpec,
    pub drop: ArchetypeSpec,
    pub persistent_shift: ArchetypeSpec,
    pub oscillation: ArchetypeSpec,
    /// Fraction of readings blanked out (left for imputation).
    pub missing_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_buildings: 50,
            hours: 500,
            start_hour: 403_224, // 2016-01-01 00:00 UTC
            seed: 7,
            level: (20.0, 200.0),
            daily_amplitude: (0.25, 0.5),
            weekly_amplitude: (0.05, 0.15),
            noise_fraction: 0.02,
            anomaly_rate: 0.02,
            spike: ArchetypeSpec {
                weight: 0.35,
                duration: (1, 3),
                magnitude: (6.0, 10.0),
                period: (0, 0),
            },
            drop: ArchetypeSpec {
                weight: 0.3,
                duration: (2, 8),
                magnitude: (0.5, 0.8),
                period: (0, 0),
            },
            persistent_shift: ArchetypeSpec {
                weight: 0.1,
                duration: (48, 120),
                magnitude: (0.3, 0.6),
                period: (0, 0),
            },
            oscillation: ArchetypeSpec {
                weight: 0.25,
                duration: (6, 16),
                magnitude: (2.0, 3.0),
                period: (2, 4),
            },
            missing_rate: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn spec(&self, a: Archetype) -> &ArchetypeSpec {
        match a {
            Archetype::Spike => &self.spike,
            Archetype::Drop => &self.drop,
            Archetype::PersistentShift => &self.persistent_shift,
            Archetype::Oscillation => &self.oscillation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_buildings == 0 || self.hours == 0 {
            return bad("synthetic corpus needs at least one building and one hour".into());
        }
        if !(0.0..1.0).contains(&self.anomaly_rate) {
            return bad(format!("anomaly rate must be in [0, 1), got {}", self.anomaly_rate));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad(format!("missing rate must be in [0, 1), got {}", self.missing_rate));
        }
        if !(self.noise_fraction > 0.0) || !(self.level.0 > 0.0) || self.level.0 > self.level.1 {
            return bad("noise fraction and level range must be positive".into());
        }
        let mut total_weight = 0.0;
        for a in Archetype::ALL {
            let s = self.spec(a);
            if s.weight < 0.0 || !s.weight.is_finite() {
                return bad(format!("{} weight must be non-negative", a.name()));
            }
            if s.weight == 0.0 {
                continue;
            }
            total_weight += s.weight;
            if s.duration.0 == 0 || s.duration.0 > s.duration.1 || s.magnitude.0 > s.magnitude.1 {
                return bad(format!("{} has an empty duration or magnitude range", a.name()));
            }
            if self.anomaly_rate > 0.0 && s.duration.0 > self.hours {
                return bad(format!(
                    "{} duration of at least {} hours exceeds the {}-hour series",
                    a.name(),
                    s.duration.0,
                    self.hours
                ));
            }
            if a == Archetype::Oscillation && (s.period.0 < 2 || s.period.0 > s.period.1) {
                return bad("oscillation period range must start at 2 hours or more".into());
            }
        }
        if self.anomaly_rate > 0.0 && total_weight == 0.0 {
            return bad("anomaly rate is positive but every archetype weight is zero".into());
        }
        Ok(())
    }
}

/// Noise-free load model of one building.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingProfile {
    pub level: f64,
    pub daily_amplitude: f64,
    pub daily_phase: f64,
    pub weekly_amplitude: f64,
    pub weekly_phase: f64,
    pub noise_std: f64,
}

impl BuildingProfile {
    pub fn base(&self, hour: usize) -> f64 {
        let h = hour as f64;
        self.level
            * (1.0
                + self.daily_amplitude * (2.0 * PI * (h + self.daily_phase) / 24.0).sin()
                + self.weekly_amplitude * (2.0 * PI * (h + self.weekly_phase) / 168.0).cos())
    }

    /// Population standard deviation of the base curve over `hours`.
    pub fn base_std(&self, hours: usize) -> f64 {
        let v: Vec<f64> = (0..hours).map(|h| self.base(h)).collect();
        let mean = v.iter().sum::<f64>() / hours as f64;
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / hours as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyEvent {
    pub building: usize,
    pub archetype: Archetype,
    pub start: usize,
    pub len: usize,
    pub magnitude: f64,
    /// +1 or -1; direction of a persistent shift.
    pub direction: f64,
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub series: Vec<BuildingSeries>,
    pub profiles: Vec<BuildingProfile>,
    pub events: Vec<AnomalyEvent>,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Anomalous reading for hour `h` of `event`, kept at least three noise
/// standard deviations from the base curve.
pub fn anomalous_value(profile: &BuildingProfile, sigma_b: f64, event: &AnomalyEvent, h: usize, noise: f64) -> f64 {
    let base = profile.base(h);
    let effect = match event.archetype {
        Archetype::Spike => event.magnitude * sigma_b,
        Archetype::Drop => -event.magnitude * base,
        Archetype::PersistentShift => event.direction * event.magnitude * base,
        Archetype::Oscillation => {
            let phase = (h - event.start) % event.period;
            let sign = if phase < event.period / 2 { 1.0 } else { -1.0 };
            sign * event.magnitude * sigma_b
        }
    };
    let dir = if effect < 0.0 { -1.0 } else { 1.0 };
    let mut v = base + effect + noise;
    let floor = 3.05 * profile.noise_std;
    if (v - base).abs() < floor || (v - base) * dir < 0.0 {
        v = base + dir * floor;
    }
    v
}

fn draw_range(rng: &mut Rng, r: (f64, f64)) -> f64 {
    rng.uniform_f64(r.0, r.1)
}

fn place_events(cfg: &SynthConfig, rng: &mut Rng) -> Result<Vec<AnomalyEvent>> {
    let total_hours = cfg.n_buildings * cfg.hours;
    let mut remaining = (cfg.anomaly_rate * total_hours as f64).round() as usize;
    let weights: Vec<f64> = Archetype::ALL.iter().map(|&a| cfg.spec(a).weight).collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut occupied = vec![vec![false; cfg.hours]; cfg.n_buildings];
    let mut events = Vec::new();
    while remaining > 0 {
        let mut pick = rng.uniform_f64(0.0, weight_sum);
        let mut archetype = Archetype::ALL[0];
        for (&a, &w) in Archetype::ALL.iter().zip(&weights) {
            if w > 0.0 {
                archetype = a;
                if pick < w {
                    break;
                }
                pick -= w;
            }
        }
        let spec = cfg.spec(archetype);
        let len = rng.int_inclusive(spec.duration.0, spec.duration.1).min(remaining).min(cfg.hours);
        let magnitude = draw_range(rng, spec.magnitude);
        let direction = if rng.uniform_f64(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
        let period = if archetype == Archetype::Oscillation {
            rng.int_inclusive(spec.period.0, spec.period.1)
        } else {
            0
        };
        let mut placed = false;
        for _ in 0..1000 {
            let b = rng.index(cfg.n_buildings);
            let start = rng.int_inclusive(0, cfg.hours - len);
            // keep one clear hour on either side so events stay distinct
            let lo = start.saturating_sub(1);
            let hi = (start + len + 1).min(cfg.hours);
            if occupied[b][lo..hi].iter().any(|&o| o) {
                continue;
            }
            occupied[b][start..start + len].iter_mut().for_each(|o| *o = true);
            events.push(AnomalyEvent {
                building: b,
                archetype,
                start,
                len,
                magnitude,
                direction,
                period,
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Config(format!(
                "could not place anomalies without overlap; anomaly rate {} is too high for {} x {} hours",
                cfg.anomaly_rate, cfg.n_buildings, cfg.hours
            )));
        }
        remaining -= len;
    }
    events.sort_by_key(|e| (e.building, e.start));
    Ok(events)
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let events = place_events(cfg, &mut Rng::derived(cfg.seed, "events", 0))?;
    let width = cfg.n_buildings.saturating_sub(1).to_string().len().max(3);
    let mut series = Vec::with_capacity(cfg.n_buildings);
    let mut profiles = Vec::with_capacity(cfg.n_buildings);
    for b in 0..cfg.n_buildings {
        let mut rng = Rng::derived(cfg.seed, "building", b as u64);
        let level = draw_range(&mut rng, cfg.level);
        let profile = BuildingProfile {
            level,
            daily_amplitude: draw_range(&mut rng, cfg.daily_amplitude),
            daily_phase: rng.uniform_f64(0.0, 24.0),
            weekly_amplitude: draw_range(&mut rng, cfg.weekly_amplitude),
            weekly_phase: rng.uniform_f64(0.0, 168.0),
            noise_std: cfg.noise_fraction * level,
        };
        let sigma_b = profile.base_std(cfg.hours);
        let mut readings: Vec<f64> = (0..cfg.hours)
            .map(|h| profile.base(h) + profile.noise_std * rng.standard_normal())
            .collect();
        let mut labels = vec![0u8; cfg.hours];
        for e in events.iter().filter(|e| e.building == b) {
            for h in e.start..e.start + e.len {
                let noise = readings[h] - profile.base(h);
                readings[h] = anomalous_value(&profile, sigma_b, e, h, noise);
                labels[h] = 1;
            }
        }
        let mut missing = Rng::derived(cfg.seed, "missing", b as u64);
        for v in readings.iter_mut() {
            *v = if cfg.missing_rate > 0.0 && missing.uniform_f64(0.0, 1.0) < cfg.missing_rate {
                f64::NAN
            } else {
                round4(*v)
            };
        }
        series.push(BuildingSeries {
            building_id: format!("b{b:0width$}"),
            start_hour: cfg.start_hour,
            readings,
            labels: Some(labels),
            stats: None,
        });
        profiles.push(profile);
    }
    Ok(SynthCorpus {
        series,
        profiles,
        events,
    })
}

impl SynthCorpus {
    /// CSV in the ingestion schema. Readings print in shortest round-trip
    /// form, so ingesting the file reproduces `series` exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("building_id,timestamp,meter_reading,anomaly\n");
        for s in &self.series {
            let labels = s.labels.as_deref();
            for (i, v) in s.readings.iter().enumerate() {
                let reading = if v.is_nan() { String::new() } else { v.to_string() };
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    s.building_id,
                    format_hour(s.start_hour + i as i64),
                    reading,
                    labels.map_or(0, |l| l[i])
                );
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn anomaly_fraction(&self) -> f64 {
        let total: usize = self.series.iter().map(|s| s.len()).sum();
        let anomalous: usize = self.series.iter().map(|s| s.anomalous_hours()).sum();
        anomalous as f64 / total as f64
    }
}
