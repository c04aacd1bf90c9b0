//! Moments of `ReLU(z)` for Gaussian `z`.

use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t * FRAC_1_SQRT_2)
}

/// `(E[ReLU(z)], E[ReLU(z)^2])` for `z ~ N(mean, std^2)`.
///
/// With `t = mean/std`: `E[ReLU z] = mean Phi(t) + std phi(t)` and
/// `E[ReLU(z)^2] = (mean^2 + std^2) Phi(t) + mean std phi(t)`. A zero standard
/// deviation gives the point-mass limit.
pub fn relu_moments(mean: f64, std: f64) -> (f64, f64) {
    if std <= 0.0 {
        let r = mean.max(0.0);
        return (r, r * r);
    }
    let t = mean / std;
    let (cdf, pdf) = (std_normal_cdf(t), std_normal_pdf(t));
    let first = mean * cdf + std * pdf;
    let second = (mean * mean + std * std) * cdf + mean * std * pdf;
    (first.max(0.0), second.max(0.0))
}
