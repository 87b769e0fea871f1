//! Seeded random source.
//!
//! ChaCha8 is value-stable across platforms and crate releases, so a seed
//! pins the whole draw sequence. Child streams are derived by hashing the
//! parent seed together with a label, which keeps independent consumers
//! (epochs, windows, restarts) decoupled from each other's draw counts.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

/// Hashes a seed together with labelled parts into a new 64-bit seed.
pub fn derive_seed(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for `(seed, label, index)`.
    pub fn derived(seed: u64, label: &str, index: u64) -> Self {
        Rng::new(derive_seed(seed, &[label.as_bytes(), &index.to_le_bytes()]))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Standard normal draw in `f64`.
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw in `[lo, hi)`; returns `lo` when the range is empty.
    pub fn uniform_f64(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        if hi <= lo {
            lo
        } else {
            self.inner.random_range(lo..=hi)
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Gaussian tensor; `stddev == 0` gives a constant tensor.
    pub fn gaussian(&mut self, mean: f32, stddev: f32, dims: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(dims);
        self.fill_gaussian(mean, stddev, t.data_mut());
        t
    }

    pub fn fill_gaussian(&mut self, mean: f32, stddev: f32, out: &mut [f32]) {
        for v in out {
            let n: f64 = self.standard_normal();
            *v = (mean as f64 + stddev as f64 * n) as f32;
        }
    }

    pub fn uniform(&mut self, lo: f32, hi: f32, dims: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(dims);
        for v in t.data_mut() {
            *v = self.uniform_f64(lo as f64, hi as f64) as f32;
        }
        t
    }
}
