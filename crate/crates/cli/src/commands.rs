use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use tmsae::analytic::{
    linear_optimal_loss_per_feature, optimize_macro, rug_loss_curve, scaling_probe,
};
use tmsae::datagen::derive_seed;
use tmsae::rug::{encode_pgm, MAX_EXPONENT};
use tmsae::stats::effective_matrix;
use tmsae::{
    load_model, noise_sigma, persian_rug, sample_batch, save_model, sigma_lower_bound,
    stats_report, train, DataConfig, RugSpec, ToyModel,
};

use crate::config::{hidden_width, ExperimentConfig};
use crate::rows::{append_csv, write_csv, CompareRow, RugRow, ScalingCsvRow, SweepRow};

/// Seed of one sweep cell: a SplitMix64 fold of the master seed with
/// `(bits of p, n_s, n_d, replicate)`, so any cell can be rerun alone.
pub fn cell_seed(master: u64, p: f64, n_s: usize, n_d: usize, replicate: u64) -> u64 {
    derive_seed(master, &[p.to_bits(), n_s as u64, n_d as u64, replicate])
}

const DATA_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p: f64,
    pub n_s: usize,
    pub n_d: usize,
    pub seed: u64,
}

/// Trains one model and summarizes it.
pub fn train_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<(ToyModel, SweepRow)> {
    let Cell { p, n_s, n_d, seed } = cell;
    let data = DataConfig::new(p, n_s, derive_seed(seed, &[DATA_STREAM]))?;
    let train_cfg = cfg.train.to_train_config(derive_seed(seed, &[INIT_STREAM]));
    let (model, report) = train(&data, n_d, &train_cfg)?;
    info!(
        "p = {p}, n_s = {n_s}, n_d = {n_d}: {} steps, window loss {:.4e}",
        report.steps_taken, report.final_loss_per_feature
    );
    let row = summarize(cfg, &model, p, seed, Some(report.steps_taken))?;
    Ok((model, row))
}

/// Held-out loss and symmetry statistics of a model.
pub fn summarize(
    cfg: &ExperimentConfig,
    model: &ToyModel,
    p: f64,
    seed: u64,
    steps: Option<usize>,
) -> Result<SweepRow> {
    let (n_s, n_d) = (model.n_s(), model.n_d());
    let eval = sample_batch(
        &DataConfig::new(p, n_s, derive_seed(seed, &[EVAL_STREAM]))?,
        cfg.train.eval_samples,
    )?;
    let stats = stats_report(model, p)?;
    // a dead diagonal entry leaves the normalized noise undefined
    let noise = noise_sigma(stats.w.view(), p).ok().map(|n| n.variance);
    Ok(SweepRow {
        p,
        n_s,
        n_d,
        r: n_d as f64 / n_s as f64,
        seed,
        steps,
        loss_per_feature: Some(model.loss_per_feature(&eval)?),
        diag_mean: Some(stats.diag_mean),
        diag_var: Some(stats.diag_var),
        bias_mean: Some(stats.bias_mean),
        bias_var: Some(stats.bias_var),
        delta_var_noise: Some(stats.delta_var_noise),
        lyapunov: stats.lyapunov.value,
        noise_sigma: noise,
        sigma_bound: sigma_lower_bound(p, n_s, n_d)?.bound_value,
        error: String::new(),
    })
}

fn failed_row(cell: Cell, err: &anyhow::Error) -> SweepRow {
    let Cell { p, n_s, n_d, seed } = cell;
    SweepRow {
        p,
        n_s,
        n_d,
        r: n_d as f64 / n_s as f64,
        seed,
        steps: None,
        loss_per_feature: None,
        diag_mean: None,
        diag_var: None,
        bias_mean: None,
        bias_var: None,
        delta_var_noise: None,
        lyapunov: None,
        noise_sigma: None,
        sigma_bound: sigma_lower_bound(p, n_s, n_d)
            .map(|b| b.bound_value)
            .unwrap_or(f64::NAN),
        error: format!("{err:#}"),
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

/// Trains the `[model]` cell, writes `model.tmsw` and appends to `train.csv`.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<SweepRow> {
    ensure_dir(out)?;
    let m = &cfg.model;
    let cell = Cell {
        p: m.p,
        n_s: m.n_s,
        n_d: m.n_d,
        seed: cell_seed(cfg.seed, m.p, m.n_s, m.n_d, 0),
    };
    let (model, row) = train_cell(cfg, cell)?;
    save_model(&model, out.join("model.tmsw"))?;
    append_csv(&out.join("train.csv"), std::slice::from_ref(&row))?;
    Ok(row)
}

pub fn sweep_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let s = &cfg.sweep;
    let mut cells = Vec::new();
    for &n_s in &s.n_s {
        for &p in &s.p {
            for &r in &s.r {
                let n_d = hidden_width(n_s, r);
                for rep in 0..s.seeds as u64 {
                    cells.push(Cell {
                        p,
                        n_s,
                        n_d,
                        seed: cell_seed(cfg.seed, p, n_s, n_d, rep),
                    });
                }
            }
        }
    }
    cells
}

/// Trains every `(n_s, p, r, replicate)` cell in parallel and writes `sweep.csv`
/// sorted by `(n_s, p, r, seed)`. Failed cells keep their row with the error text.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    ensure_dir(out)?;
    let cells = sweep_cells(cfg);
    let save = cfg.sweep.save_weights;
    let mut rows: Vec<SweepRow> = pool(threads)?.install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                let result = train_cell(cfg, cell).and_then(|(model, row)| {
                    if save {
                        let name = format!(
                            "model_ns{}_nd{}_p{}_{:016x}.tmsw",
                            cell.n_s, cell.n_d, cell.p, cell.seed
                        );
                        save_model(&model, out.join(name))?;
                    }
                    Ok(row)
                });
                result.unwrap_or_else(|e| {
                    warn!("cell {cell:?} failed: {e:#}");
                    failed_row(cell, &e)
                })
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        a.n_s
            .cmp(&b.n_s)
            .then(a.p.total_cmp(&b.p))
            .then(a.r.total_cmp(&b.r))
            .then(a.seed.cmp(&b.seed))
    });
    write_csv(&out.join("sweep.csv"), &rows)?;
    Ok(rows)
}

/// Builds a Persian rug, writes `rug.pgm` and `rug.csv`.
pub fn cmd_rug(cfg: &ExperimentConfig, out: &Path) -> Result<RugRow> {
    let r = &cfg.rug;
    if !r.n_s.is_power_of_two() || r.n_s.trailing_zeros() > MAX_EXPONENT {
        bail!(
            "rug.n_s = {} must be a power of two no larger than 2^{MAX_EXPONENT}",
            r.n_s
        );
    }
    ensure_dir(out)?;
    let spec = RugSpec::random(r.n_s.trailing_zeros(), r.n_d, cfg.seed)?;
    let w = persian_rug(&spec)?;
    fs::write(out.join("rug.pgm"), encode_pgm(w.view()))?;
    let sigma2 = noise_sigma(w.view(), r.p)?.variance;
    let bound = sigma_lower_bound(r.p, r.n_s, r.n_d)?.bound_value;
    let opt = optimize_macro(sigma2.sqrt(), r.p)?;
    let row = RugRow {
        n_s: r.n_s,
        n_d: r.n_d,
        p: r.p,
        sigma2,
        bound,
        a: opt.a,
        b: opt.b,
        loss: opt.loss.total,
    };
    write_csv(&out.join("rug.csv"), std::slice::from_ref(&row))?;
    Ok(row)
}

/// Trained, rug-analytic and linear per-feature losses for each `n_d`; writes `compare.csv`.
pub fn cmd_compare(
    cfg: &ExperimentConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<CompareRow>> {
    ensure_dir(out)?;
    let c = &cfg.compare;
    let curve = rug_loss_curve(c.p, c.n_s, &c.n_d)?;
    let trained: Vec<Result<f64>> = pool(threads)?.install(|| {
        c.n_d
            .par_iter()
            .map(|&n_d| {
                let cell = Cell {
                    p: c.p,
                    n_s: c.n_s,
                    n_d,
                    seed: cell_seed(cfg.seed, c.p, c.n_s, n_d, 0),
                };
                let (_, row) = train_cell(cfg, cell)?;
                Ok(row.loss_per_feature.expect("set for trained cells"))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(curve.len());
    for (point, trained_loss) in curve.iter().zip(trained) {
        rows.push(CompareRow {
            r: point.r,
            trained_loss: trained_loss?,
            rug_loss: point.loss,
            linear_loss: linear_optimal_loss_per_feature(c.p, c.n_s, point.n_d)?,
        });
    }
    write_csv(&out.join("compare.csv"), &rows)?;
    Ok(rows)
}

pub fn cmd_scaling(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ScalingCsvRow>> {
    ensure_dir(out)?;
    let s = &cfg.scaling;
    let rows: Vec<ScalingCsvRow> = scaling_probe(&s.p, s.r, s.n_quad)?
        .into_iter()
        .map(|r| ScalingCsvRow {
            p: r.p,
            r: r.r,
            sigma: r.sigma,
            loss: r.loss,
            loss_r_over_p2: r.ratio_p2,
            loss_r_over_p2_log: r.ratio_p2_log,
            loss_over_p: r.loss_over_p,
        })
        .collect();
    write_csv(&out.join("scaling.csv"), &rows)?;
    Ok(rows)
}

/// Recomputes the statistics of a saved model at sparsity `p`.
pub fn cmd_stats(cfg: &ExperimentConfig, weights: &Path, p: f64) -> Result<SweepRow> {
    let model = load_model(weights).with_context(|| format!("loading {}", weights.display()))?;
    let row = summarize(cfg, &model, p, cfg.seed, None)?;
    debug_assert_eq!(effective_matrix(&model).dim(), (model.n_s(), model.n_s()));
    Ok(row)
}
