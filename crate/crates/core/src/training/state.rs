use crate::error::{Error, Result};
use crate::model::{CheckpointConfig, Discriminator, Generator, ModelCheckpoint, ModelConfig};
use crate::nn::{AdamConfig, AdamState, Rng, Tensor};

/// Models, optimizer moments and progress counters: everything needed to
/// continue training bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub gen: Generator,
    pub disc: Discriminator,
    pub adam_g: AdamState,
    pub adam_d: AdamState,
    pub epochs_done: usize,
    pub iteration: u64,
}

// Counters are split into 16-bit pieces so f32 storage stays exact.
fn counter_tensor(v: u64) -> Tensor {
    Tensor::vector((0..4).map(|k| ((v >> (16 * k)) & 0xffff) as f32).collect())
}

fn counter_value(t: &Tensor) -> Result<u64> {
    if t.len() != 4 || t.data().iter().any(|&x| !(0.0..65536.0).contains(&x) || x.fract() != 0.0) {
        return Err(Error::Data("malformed counter tensor in checkpoint".into()));
    }
    Ok(t.data().iter().enumerate().map(|(k, &x)| (x as u64) << (16 * k)).sum())
}

impl TrainState {
    /// Freshly initialized networks; weights come from a stream derived from
    /// `seed`.
    pub fn new(model: &ModelConfig, adam: AdamConfig, seed: u64) -> Self {
        let (gen, disc) = model.init(&mut Rng::derived(seed, "init", 0));
        Self::from_models(gen, disc, adam)
    }

    pub fn zeros(model: &ModelConfig, adam: AdamConfig) -> Self {
        let (gen, disc) = model.zeros();
        Self::from_models(gen, disc, adam)
    }

    pub fn from_models(gen: Generator, disc: Discriminator, adam: AdamConfig) -> Self {
        let adam_g = AdamState::for_params(adam, &gen.params());
        let adam_d = AdamState::for_params(adam, &disc.params());
        TrainState {
            gen,
            disc,
            adam_g,
            adam_d,
            epochs_done: 0,
            iteration: 0,
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            latent_dim: self.gen.latent_dim,
            window_len: self.gen.window_len,
            gen_hidden: self.gen.hidden_sizes(),
            disc_hidden: self.disc.hidden_size(),
        }
    }

    pub fn to_checkpoint(&self, clip_c: f32, seed: u64) -> ModelCheckpoint {
        let config = CheckpointConfig {
            latent_dim: self.gen.latent_dim as u32,
            window_length: self.gen.window_len as u32,
            clip_c,
            seed,
        };
        let mut ckpt = ModelCheckpoint::from_models(config, &self.gen, &self.disc);
        ckpt.push("meta.epoch", counter_tensor(self.epochs_done as u64));
        ckpt.push("meta.iteration", counter_tensor(self.iteration));
        for (prefix, names, adam) in [
            ("gen", self.gen.param_names(), &self.adam_g),
            ("disc", self.disc.param_names(), &self.adam_d),
        ] {
            ckpt.push(format!("adam.{prefix}.step"), counter_tensor(adam.step_count));
            for ((name, m), v) in names.iter().zip(&adam.m).zip(&adam.v) {
                ckpt.push(format!("adam.m.{name}"), m.clone());
                ckpt.push(format!("adam.v.{name}"), v.clone());
            }
        }
        ckpt
    }

    /// Restores a state written by [`TrainState::to_checkpoint`]. A
    /// checkpoint without optimizer tensors starts with fresh moments.
    pub fn from_checkpoint(ckpt: &ModelCheckpoint, adam: AdamConfig) -> Result<Self> {
        let gen = ckpt.generator()?;
        let disc = ckpt.discriminator()?;
        let mut state = Self::from_models(gen, disc, adam);
        if let Some(t) = ckpt.get("meta.epoch") {
            state.epochs_done = counter_value(t)? as usize;
        }
        if let Some(t) = ckpt.get("meta.iteration") {
            state.iteration = counter_value(t)?;
        }
        let names = [state.gen.param_names(), state.disc.param_names()];
        for ((prefix, names), adam) in ["gen", "disc"].iter().zip(names).zip([&mut state.adam_g, &mut state.adam_d]) {
            let Some(step) = ckpt.get(&format!("adam.{prefix}.step")) else {
                continue;
            };
            adam.step_count = counter_value(step)?;
            for (i, name) in names.iter().enumerate() {
                for (kind, slot) in [("m", &mut adam.m[i]), ("v", &mut adam.v[i])] {
                    let key = format!("adam.{kind}.{name}");
                    let t = ckpt
                        .get(&key)
                        .ok_or_else(|| Error::Data(format!("checkpoint is missing tensor {key:?}")))?;
                    if t.dims() != slot.dims() {
                        return Err(Error::Data(format!("optimizer tensor {key:?} has the wrong shape")));
                    }
                    *slot = t.clone();
                }
            }
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_round_trip() {
        for v in [0u64, 1, 65535, 65536, 1 << 40, u64::MAX] {
            assert_eq!(counter_value(&counter_tensor(v)).unwrap(), v);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = ModelConfig {
            latent_dim: 3,
            window_len: 5,
            gen_hidden: vec![2, 3],
            disc_hidden: 4,
        };
        let mut s = TrainState::new(&model, AdamConfig::default(), 5);
        s.epochs_done = 3;
        s.iteration = 70_000;
        s.adam_g.step_count = 70_000;
        s.adam_d.m[1].fill(0.25);
        let ckpt = ModelCheckpoint::decode(&s.to_checkpoint(3.5, 5).encode()).unwrap();
        let back = TrainState::from_checkpoint(&ckpt, AdamConfig::default()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.model_config(), model);
    }
}
