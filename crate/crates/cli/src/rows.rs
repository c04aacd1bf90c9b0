//! CSV row types. Field order is the column order and is part of the output format.

use std::fs::OpenOptions;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub n_s: usize,
    pub n_d: usize,
    pub r: f64,
    pub seed: u64,
    pub steps: Option<usize>,
    pub loss_per_feature: Option<f64>,
    pub diag_mean: Option<f64>,
    pub diag_var: Option<f64>,
    pub bias_mean: Option<f64>,
    pub bias_var: Option<f64>,
    pub delta_var_noise: Option<f64>,
    pub lyapunov: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub sigma_bound: f64,
    /// Empty on success.
    pub error: String,
}

pub const SWEEP_HEADER: &str = "p,n_s,n_d,r,seed,steps,loss_per_feature,diag_mean,diag_var,bias_mean,bias_var,delta_var_noise,lyapunov,noise_sigma,sigma_bound,error";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub r: f64,
    pub trained_loss: f64,
    pub rug_loss: f64,
    pub linear_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RugRow {
    pub n_s: usize,
    pub n_d: usize,
    pub p: f64,
    /// Mean interference variance of the rug.
    pub sigma2: f64,
    pub bound: f64,
    pub a: f64,
    pub b: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingCsvRow {
    pub p: f64,
    pub r: f64,
    pub sigma: f64,
    pub loss: f64,
    pub loss_r_over_p2: f64,
    pub loss_r_over_p2_log: f64,
    pub loss_over_p: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Appends rows, writing the header only when the file is new or empty.
pub fn append_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
