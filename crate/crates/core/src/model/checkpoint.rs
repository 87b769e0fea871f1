//! Checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        "GLSM"
//! version      u32            (currently 1)
//! latent_dim   u32
//! window_len   u32
//! clip_c       f32
//! seed         u64
//! count        u32            number of tensors
//! per tensor:
//!   name_len   u16, name UTF-8 bytes
//!   rank       u8
//!   dims       u32 * rank
//!   data       f32 * product(dims)
//! ```
//!
//! LSTM tensors keep the (input, forget, cell, output) gate-block order of
//! [`crate::nn::LstmParams`]. Tensors whose name starts with `meta.` or
//! `adam.` carry training metadata and optimizer moments.

use std::path::Path;

use super::{Discriminator, Generator, ModelConfig};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};
use crate::nn::{Dense, LstmParams, Tensor};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GLSM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointConfig {
    pub latent_dim: u32,
    pub window_length: u32,
    pub clip_c: f32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub config: CheckpointConfig,
    pub tensors: Vec<(String, Tensor)>,
}

impl ModelCheckpoint {
    pub fn new(config: CheckpointConfig) -> Self {
        ModelCheckpoint {
            config,
            tensors: Vec::new(),
        }
    }

    pub fn from_models(config: CheckpointConfig, gen: &Generator, disc: &Discriminator) -> Self {
        let mut ckpt = ModelCheckpoint::new(config);
        for (name, t) in gen.param_names().into_iter().zip(gen.params()) {
            ckpt.push(name, t.clone());
        }
        for (name, t) in disc.param_names().into_iter().zip(disc.params()) {
            ckpt.push(name, t.clone());
        }
        ckpt
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.push((name.into(), tensor));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn require(&self, name: &str) -> Result<Tensor> {
        self.get(name)
            .cloned()
            .ok_or_else(|| Error::Data(format!("checkpoint is missing tensor {name:?}")))
    }

    pub fn generator(&self) -> Result<Generator> {
        let mut layers = Vec::new();
        while self.get(&format!("gen.lstm{}.w", layers.len())).is_some() {
            let i = layers.len();
            layers.push(LstmParams::from_tensors(
                self.require(&format!("gen.lstm{i}.w"))?,
                self.require(&format!("gen.lstm{i}.u"))?,
                self.require(&format!("gen.lstm{i}.b"))?,
            )?);
        }
        if layers.is_empty() {
            return Err(Error::Data("checkpoint has no generator layers".into()));
        }
        let latent_dim = self.config.latent_dim as usize;
        if layers[0].input_size() != latent_dim {
            return Err(Error::Data(format!(
                "generator input size {} disagrees with latent_dim {latent_dim}",
                layers[0].input_size()
            )));
        }
        for k in 1..layers.len() {
            if layers[k].input_size() != layers[k - 1].hidden_size() {
                return Err(Error::Data(format!("generator layer {k} input size mismatch")));
            }
        }
        let out = Dense::from_tensors(self.require("gen.out.w")?, self.require("gen.out.b")?)?;
        let top = layers.last().expect("non-empty").hidden_size();
        if out.input_size() != top || out.output_size() != 1 {
            return Err(Error::Data("generator output layer shape mismatch".into()));
        }
        Ok(Generator {
            latent_dim,
            window_len: self.config.window_length as usize,
            layers,
            out,
        })
    }

    pub fn discriminator(&self) -> Result<Discriminator> {
        let lstm = LstmParams::from_tensors(
            self.require("disc.lstm.w")?,
            self.require("disc.lstm.u")?,
            self.require("disc.lstm.b")?,
        )?;
        let out = Dense::from_tensors(self.require("disc.out.w")?, self.require("disc.out.b")?)?;
        if lstm.input_size() != 1 || out.input_size() != lstm.hidden_size() || out.output_size() != 1 {
            return Err(Error::Data("discriminator shape mismatch".into()));
        }
        Ok(Discriminator { lstm, out })
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let gen = self.generator()?;
        let disc = self.discriminator()?;
        Ok(ModelConfig {
            latent_dim: gen.latent_dim,
            window_len: gen.window_len,
            gen_hidden: gen.hidden_sizes(),
            disc_hidden: disc.hidden_size(),
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(&CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.u32(self.config.latent_dim);
        w.u32(self.config.window_length);
        w.f32(self.config.clip_c);
        w.u64(self.config.seed);
        w.u32(self.tensors.len() as u32);
        for (name, t) in &self.tensors {
            let bytes = name.as_bytes();
            w.u16(bytes.len() as u16);
            w.bytes(bytes);
            w.u8(t.rank() as u8);
            for &d in t.dims() {
                w.u32(d as u32);
            }
            w.f32_slice(t.data());
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = ByteReader::new(bytes);
        r.magic(CHECKPOINT_MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(FormatError::Version {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let config = CheckpointConfig {
            latent_dim: r.u32()?,
            window_length: r.u32()?,
            clip_c: r.f32()?,
            seed: r.u64()?,
        };
        let count = r.u32()?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = r.utf8(name_len)?;
            let rank = r.u8()? as usize;
            let mut dims = Vec::with_capacity(rank);
            let mut elements: usize = 1;
            for _ in 0..rank {
                let d = r.u32()? as usize;
                elements = elements
                    .checked_mul(d)
                    .ok_or_else(|| r.invalid(format!("tensor {name:?} is too large")))?;
                dims.push(d);
            }
            if elements.saturating_mul(4) > r.remaining() {
                return Err(FormatError::Truncated {
                    offset: r.offset(),
                    needed: elements.saturating_mul(4) - r.remaining(),
                });
            }
            let data = r.f32_vec(elements)?;
            let tensor = Tensor::from_vec(&dims, data).map_err(|e| r.invalid(e.to_string()))?;
            if tensors.iter().any(|(n, _): &(String, Tensor)| n == &name) {
                return Err(r.invalid(format!("duplicate tensor {name:?}")));
            }
            tensors.push((name, tensor));
        }
        r.finish()?;
        Ok(ModelCheckpoint { config, tensors })
    }

    /// Rejects a checkpoint whose config block disagrees with `expected`.
    pub fn check_config(&self, expected: &CheckpointConfig) -> Result<(), FormatError> {
        let c = &self.config;
        let mismatch = |field: &'static str, expected: String, found: String| FormatError::ConfigMismatch {
            field,
            expected,
            found,
        };
        if c.latent_dim != expected.latent_dim {
            return Err(mismatch("latent_dim", expected.latent_dim.to_string(), c.latent_dim.to_string()));
        }
        if c.window_length != expected.window_length {
            return Err(mismatch(
                "window_length",
                expected.window_length.to_string(),
                c.window_length.to_string(),
            ));
        }
        if c.clip_c.to_bits() != expected.clip_c.to_bits() {
            return Err(mismatch("clip_c", expected.clip_c.to_string(), c.clip_c.to_string()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(ModelCheckpoint::decode(&bytes)?)
    }

    pub fn load_expecting(path: &Path, expected: &CheckpointConfig) -> Result<Self> {
        let ckpt = ModelCheckpoint::load(path)?;
        ckpt.check_config(expected)?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Rng;

    fn sample() -> ModelCheckpoint {
        let mut rng = Rng::new(1);
        let gen = Generator::init(4, &[3, 5], 6, &mut rng);
        let disc = Discriminator::init(4, &mut rng);
        let cfg = CheckpointConfig {
            latent_dim: 4,
            window_length: 6,
            clip_c: 3.5,
            seed: 42,
        };
        let mut c = ModelCheckpoint::from_models(cfg, &gen, &disc);
        c.push("meta.epoch", Tensor::vector(vec![3.0]));
        c
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let d = ModelCheckpoint::decode(&c.encode()).unwrap();
        assert_eq!(d.config, c.config);
        assert_eq!(d.tensors.len(), c.tensors.len());
        for ((na, ta), (nb, tb)) in c.tensors.iter().zip(&d.tensors) {
            assert_eq!(na, nb);
            assert_eq!(ta.dims(), tb.dims());
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(ta), bits(tb));
        }
        assert_eq!(d.generator().unwrap(), c.generator().unwrap());
        assert_eq!(d.discriminator().unwrap(), c.discriminator().unwrap());
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = sample().encode();
        assert_eq!(&bytes[..4], b"GLSM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 6);
        assert_eq!(f32::from_le_bytes(bytes[16..20].try_into().unwrap()), 3.5);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 42);
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let mut bytes = sample().encode();
        bytes[0] = b'X';
        assert!(matches!(ModelCheckpoint::decode(&bytes), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let mut bytes = sample().encode();
        bytes[4] = 9;
        assert!(matches!(
            ModelCheckpoint::decode(&bytes),
            Err(FormatError::Version { found: 9, .. })
        ));
    }

    #[test]
    fn truncation_is_detected_everywhere() {
        let bytes = sample().encode();
        for cut in [0, 3, 10, 27, 31, 40, bytes.len() - 1] {
            assert!(
                matches!(ModelCheckpoint::decode(&bytes[..cut]), Err(FormatError::Truncated { .. })),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn window_length_mismatch_is_a_config_error() {
        let c = sample();
        let expected = CheckpointConfig {
            window_length: 48,
            ..c.config
        };
        assert!(matches!(
            c.check_config(&expected),
            Err(FormatError::ConfigMismatch { field: "window_length", .. })
        ));
        assert!(c.check_config(&c.config).is_ok());
    }
}
