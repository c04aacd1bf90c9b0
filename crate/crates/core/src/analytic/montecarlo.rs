use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::MacroParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

/// Sample mean of `(x - ReLU(a (x + nu) + b))^2` with `x = c u`, `c ~ Bernoulli(p)`,
/// `u ~ U[0, 1)` and `nu ~ N(0, sigma^2)`.
pub fn empirical_macro_loss(params: &MacroParams, n_samples: usize, seed: u64) -> McEstimate {
    let &MacroParams { a, b, sigma, p } = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford accumulation
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 0..n_samples {
        let on = rng.random::<f64>() < p;
        let x = if on { rng.random::<f64>() } else { 0.0 };
        let nu = if sigma > 0.0 {
            sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let out = (a * (x + nu) + b).max(0.0);
        let loss = (x - out) * (x - out);
        let delta = loss - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (loss - mean);
    }
    let var = if n_samples > 1 {
        m2 / (n_samples - 1) as f64
    } else {
        0.0
    };
    McEstimate {
        mean,
        std_err: (var / n_samples.max(1) as f64).sqrt(),
        n_samples,
    }
}
