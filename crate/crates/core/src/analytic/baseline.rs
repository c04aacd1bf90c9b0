use crate::datagen::data_moments;
use crate::error::{Error, Result};

/// Reconstruction error of the best affine rank-`n_d` map on i.i.d. features:
/// every discarded principal direction costs `var(x)`, so the loss is
/// `(n_s - n_d) (p/3 - p^2/4)`.
pub fn linear_optimal_loss(p: f64, n_s: usize, n_d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} is outside [0, 1]")));
    }
    if n_d > n_s {
        return Err(Error::invalid(format!("n_d = {n_d} exceeds n_s = {n_s}")));
    }
    Ok((n_s - n_d) as f64 * data_moments(p).variance)
}

pub fn linear_optimal_loss_per_feature(p: f64, n_s: usize, n_d: usize) -> Result<f64> {
    Ok(linear_optimal_loss(p, n_s, n_d)? / n_s as f64)
}
