//! Sparse i.i.d. feature data.
//!
//! Each component is `x_i = c_i * u_i` with `c_i ~ Bernoulli(p)` and
//! `u_i ~ Uniform[0, 1)`, all independent. Streams come from ChaCha8
//! (`rand_chacha::ChaCha8Rng`), a counter-based generator, seeded with a
//! 64-bit seed; a batch is therefore reproducible from `(p, n_s, seed, n)`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataConfig {
    /// Probability that a feature is on.
    pub p: f64,
    /// Sparse dimension.
    pub n_s: usize,
    pub seed: u64,
}

impl DataConfig {
    pub fn new(p: f64, n_s: usize, seed: u64) -> Result<Self> {
        let cfg = DataConfig { p, n_s, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid(format!("p = {} is outside [0, 1]", self.p)));
        }
        if self.n_s == 0 {
            return Err(Error::invalid("n_s must be at least 1"));
        }
        Ok(())
    }
}

/// A batch of sparse feature vectors, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBatch {
    pub data: Array2<f64>,
}

impl SparseBatch {
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_s(&self) -> usize {
        self.data.ncols()
    }

    pub fn nonzero_fraction(&self) -> f64 {
        let nnz = self.data.iter().filter(|&&v| v != 0.0).count();
        nnz as f64 / self.data.len().max(1) as f64
    }
}

/// Draws successive batches from one ChaCha8 stream.
///
/// A single uniform draw `v` decides each entry: the feature is on when
/// `v < p`, and then `v / p` is uniform on `[0, 1)` conditional on that event.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    cfg: DataConfig,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(cfg: DataConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(BatchSampler {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn config(&self) -> &DataConfig {
        &self.cfg
    }

    pub fn next_batch(&mut self, n: usize) -> SparseBatch {
        let p = self.cfg.p;
        let rng = &mut self.rng;
        let data = Array2::from_shape_simple_fn((n, self.cfg.n_s), || {
            let v: f64 = rng.random();
            if v < p {
                v / p
            } else {
                0.0
            }
        });
        SparseBatch { data }
    }
}

pub fn sample_batch(cfg: &DataConfig, n: usize) -> Result<SparseBatch> {
    if n == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    Ok(BatchSampler::new(*cfg)?.next_batch(n))
}

/// Exact moments of a single component `x = c * u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

/// `(p/2, p/3, p/3 - p^2/4)`; the variance is evaluated as `(4p - 3p^2) / 12`.
pub fn data_moments(p: f64) -> Moments {
    Moments {
        mean: p / 2.0,
        second_moment: p / 3.0,
        variance: (4.0 * p - 3.0 * p * p) / 12.0,
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of words into a master seed with repeated SplitMix64 rounds.
///
/// `derive_seed(m, &[a, b])` = `splitmix64(splitmix64(splitmix64(m) ^ a) ^ b)`.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(master), |acc, &w| splitmix64(acc ^ w))
}
