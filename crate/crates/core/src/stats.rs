//! Statistical permutation-symmetry diagnostics of the effective matrix `W = W_out W_in`.
//!
//! A trained model is symmetric "in distribution" when its diagonal entries,
//! biases and per-row off-diagonal noise variances agree across features, and
//! when each row's off-diagonal entries are spread out enough for the
//! interference they produce to be Gaussian. The last property is measured by
//! the worst-row Lyapunov ratio `sum |w|^3 / (sum w^2)^{3/2}`.

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::datagen::data_moments;
use crate::error::{Error, Result};
use crate::model::ToyModel;

pub fn effective_matrix(model: &ToyModel) -> Array2<f64> {
    model.w_out.dot(&model.w_in)
}

/// Population (divide-by-N) variance, two-pass.
pub fn population_variance<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().copied().collect();
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(&values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

fn mean<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (n, s) = values
        .into_iter()
        .fold((0usize, 0.0), |(n, s), &v| (n + 1, s + v));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn check_square(w: &ArrayView2<'_, f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::shape(
            "square matrix",
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    Ok(())
}

pub fn diag_fluctuation(w: ArrayView2<'_, f64>) -> Result<f64> {
    check_square(&w)?;
    Ok(population_variance(w.diag().iter()))
}

pub fn bias_fluctuation(b: ArrayView1<'_, f64>) -> f64 {
    population_variance(b.iter())
}

/// Per-row `sum_{j != i} W_ij^2`.
pub fn row_offdiag_sumsq(w: ArrayView2<'_, f64>) -> Array1<f64> {
    Array1::from_iter(w.rows().into_iter().enumerate().map(|(i, row)| {
        row.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v * v)
            .sum::<f64>()
    }))
}

/// Variance across rows of the interference variances `var(x) * sum_{j != i} W_ij^2`.
pub fn offdiag_symmetry(w: ArrayView2<'_, f64>, p: f64) -> Result<f64> {
    check_square(&w)?;
    let var_x = data_moments(p).variance;
    let noise = row_offdiag_sumsq(w).mapv(|s| var_x * s);
    Ok(population_variance(noise.iter()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovStat {
    /// Worst-row ratio; `None` when every row was excluded.
    pub value: Option<f64>,
    /// Rows whose off-diagonal entries are all zero.
    pub excluded_rows: Vec<usize>,
}

pub fn lyapunov_stat(w: ArrayView2<'_, f64>) -> Result<LyapunovStat> {
    check_square(&w)?;
    let mut value: Option<f64> = None;
    let mut excluded_rows = Vec::new();
    for (i, row) in w.rows().into_iter().enumerate() {
        let (mut s2, mut s3) = (0.0, 0.0);
        for (j, &v) in row.iter().enumerate() {
            if j != i {
                let a = v.abs();
                s2 += a * a;
                s3 += a * a * a;
            }
        }
        if s2 == 0.0 {
            excluded_rows.push(i);
            continue;
        }
        let ratio = s3 / s2.powf(1.5);
        value = Some(value.map_or(ratio, |v| v.max(ratio)));
    }
    if !excluded_rows.is_empty() {
        warn!(
            "Lyapunov ratio undefined for {} row(s) with no off-diagonal weight; excluded",
            excluded_rows.len()
        );
    }
    Ok(LyapunovStat {
        value,
        excluded_rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveStats {
    pub w: Array2<f64>,
    /// Mean diagonal entry, the gain `a`.
    pub diag_mean: f64,
    pub diag_var: f64,
    pub bias_mean: f64,
    pub bias_var: f64,
    /// Per-row interference mean `E[x] * sum_{j != i} W_ij` before it is absorbed into the bias.
    pub row_offdiag_mean: Array1<f64>,
    pub row_offdiag_sumsq: Array1<f64>,
    pub delta_var_noise: f64,
    pub lyapunov: LyapunovStat,
}

pub fn stats_report(model: &ToyModel, p: f64) -> Result<EffectiveStats> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} is outside [0, 1]")));
    }
    let w = effective_matrix(model);
    let view = w.view();
    let mean_x = data_moments(p).mean;
    let row_offdiag_mean = Array1::from_iter(
        view.rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| mean_x * (row.sum() - row[i])),
    );
    let stats = EffectiveStats {
        diag_mean: mean(view.diag().iter()),
        diag_var: diag_fluctuation(view)?,
        bias_mean: mean(model.b.iter()),
        bias_var: bias_fluctuation(model.b.view()),
        row_offdiag_mean,
        row_offdiag_sumsq: row_offdiag_sumsq(view),
        delta_var_noise: offdiag_symmetry(view, p)?,
        lyapunov: lyapunov_stat(view)?,
        w,
    };
    Ok(stats)
}
