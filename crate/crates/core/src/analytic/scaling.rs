//! High-noise and high-sparsity behaviour of the reduced loss.

use super::{optimize_macro_with, relu_moments, Integrator};
use crate::error::{Error, Result};
use crate::rug::sigma_lower_bound;

/// Leading-order `a * sigma` at optimal gain when `sigma` dominates, with the
/// bias written as `b_hat = sigma * b_scaled`:
/// `p E[u] E[ReLU(z + b_scaled)] / E[ReLU(z + b_scaled)^2]`, `z ~ N(0, 1)`.
pub fn large_sigma_a(p: f64, b_scaled: f64) -> f64 {
    let (m1, m2) = relu_moments(b_scaled, 1.0);
    p * 0.5 * m1 / m2
}

/// Leading-order profile loss for large `sigma`: `p/3 - (p/2)^2 E1^2 / E2`.
///
/// `E1^2 <= E2` with equality only as `b_scaled -> inf`, so the loss decreases
/// towards `p/3 - p^2/4` without reaching it.
pub fn large_sigma_loss(p: f64, b_scaled: f64) -> f64 {
    let (m1, m2) = relu_moments(b_scaled, 1.0);
    p / 3.0 - 0.25 * p * p * m1 * m1 / m2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n_d: usize,
    pub r: f64,
    pub sigma: f64,
    /// Optimized per-feature loss.
    pub loss: f64,
}

/// Per-feature loss of the Persian rug at each hidden width, with `sigma`
/// at the noise bound and `(a, b)` optimized separately for every width.
pub fn rug_loss_curve(p: f64, n_s: usize, n_d_list: &[usize]) -> Result<Vec<CurvePoint>> {
    let quad = Integrator::default();
    n_d_list
        .iter()
        .map(|&n_d| {
            let bound = sigma_lower_bound(p, n_s, n_d)?;
            let sigma = bound.bound_value.sqrt();
            let opt = optimize_macro_with(sigma, p, &quad)?;
            Ok(CurvePoint {
                n_d,
                r: n_d as f64 / n_s as f64,
                sigma,
                loss: opt.loss.total,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub p: f64,
    pub r: f64,
    pub sigma: f64,
    pub loss: f64,
    /// `L r / p^2`
    pub ratio_p2: f64,
    /// `L r / (p^2 ln(1/p))`
    pub ratio_p2_log: f64,
    pub loss_over_p: f64,
}

/// Optimized loss at `sigma^2 = var(x) (1/r - 1)` for each `p`, with the
/// ratios expected to stay bounded in the high-sparsity regime.
/// `n_quad` is the Gauss-Legendre degree per panel.
pub fn scaling_probe(p_list: &[f64], r: f64, n_quad: usize) -> Result<Vec<ScalingRow>> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid(format!("r = {r} must lie in (0, 1]")));
    }
    let quad = Integrator::new(n_quad, 1e-13);
    p_list
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("p = {p} must lie in (0, 1)")));
            }
            let var_x = crate::datagen::data_moments(p).variance;
            let sigma = (var_x * (1.0 / r - 1.0)).sqrt();
            let loss = optimize_macro_with(sigma, p, &quad)?.loss.total;
            let ratio_p2 = loss * r / (p * p);
            Ok(ScalingRow {
                p,
                r,
                sigma,
                loss,
                ratio_p2,
                ratio_p2_log: ratio_p2 / (1.0 / p).ln(),
                loss_over_p: loss / p,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_sigma_loss_is_below_trivial_and_above_limit() {
        for &p in &[0.01, 0.1, 0.5] {
            for k in -20..=20 {
                let l = large_sigma_loss(p, 0.25 * k as f64);
                assert!(l < p / 3.0);
                assert!(l > p / 3.0 - p * p / 4.0);
            }
        }
    }

    #[test]
    fn full_rank_curve_point_is_lossless() {
        let c = rug_loss_curve(0.05, 64, &[64]).unwrap();
        assert_eq!(c[0].sigma, 0.0);
        assert!(c[0].loss < 1e-8);
    }

    #[test]
    fn curve_is_nonincreasing_in_r() {
        let n_d: Vec<usize> = (1..=16).map(|k| 16 * k).collect();
        let c = rug_loss_curve(0.05, 256, &n_d).unwrap();
        for w in c.windows(2) {
            assert!(w[1].loss <= w[0].loss + 1e-12, "{:?} then {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn probe_rejects_bad_inputs() {
        assert!(scaling_probe(&[0.01], 0.0, 20).is_err());
        assert!(scaling_probe(&[0.0], 0.25, 20).is_err());
    }
}
