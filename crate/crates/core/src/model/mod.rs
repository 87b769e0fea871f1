//! Generator and discriminator networks and their checkpoint format.

mod checkpoint;
mod discriminator;
mod generator;

pub use checkpoint::{CheckpointConfig, ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use discriminator::{DiscCache, DiscGrads, Discriminator};
pub use generator::{GenCache, GenGrads, Generator};

use crate::nn::Rng;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub latent_dim: usize,
    pub window_len: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            latent_dim: 100,
            window_len: 60,
            gen_hidden: vec![32, 64, 128],
            disc_hidden: 100,
        }
    }
}

impl ModelConfig {
    pub fn init(&self, rng: &mut Rng) -> (Generator, Discriminator) {
        let gen = Generator::init(self.latent_dim, &self.gen_hidden, self.window_len, rng);
        let disc = Discriminator::init(self.disc_hidden, rng);
        (gen, disc)
    }

    pub fn zeros(&self) -> (Generator, Discriminator) {
        (
            Generator::zeros(self.latent_dim, &self.gen_hidden, self.window_len),
            Discriminator::zeros(self.disc_hidden),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Parameter count of the default architecture:
    ///   G: 4*32*(100+32)+128 + 4*64*(32+64)+256 + 4*128*(64+128)+512 + 128+1 = 140_801
    ///   D: 4*100*(1+100)+400 + 100+1 = 40_901
    #[test]
    fn default_parameter_count_is_pinned() {
        let (g, d) = ModelConfig::default().zeros();
        assert_eq!(g.param_count(), 140_801);
        assert_eq!(d.param_count(), 40_901);
        assert_eq!(g.hidden_sizes(), vec![32, 64, 128]);
        assert_eq!(d.hidden_size(), 100);
    }
}
