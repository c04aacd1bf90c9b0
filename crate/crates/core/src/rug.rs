//! Hadamard matrices, Persian rug effective matrices and the minimal noise-variance bound.
//!
//! The Sylvester Hadamard matrix of size `n = 2^m` has entries
//! `H_ij = (-1)^{popcount(i & j)}`. For a subset `S` of `n_d` indices the
//! Persian rug matrix is `R = n_d^{-1} sum_{k in S} H_ik H_kj`: symmetric, unit
//! diagonal, and `n/n_d` times a rank-`n_d` projector. Any rank-`n_d` matrix with
//! unit diagonal has mean interference variance at least
//! `var(x) (n_s/n_d - 1)`, and `R` meets this bound with equality.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::data_moments;
use crate::error::{Error, Result};

/// Largest supported exponent; an `n x n` f64 matrix at `m = 13` is 512 MiB.
pub const MAX_EXPONENT: u32 = 13;

fn check_exponent(m: u32) -> Result<usize> {
    if m > MAX_EXPONENT {
        return Err(Error::TooLarge { exponent: m });
    }
    Ok(1usize << m)
}

#[inline]
fn sylvester_sign(i: usize, j: usize) -> i8 {
    if (i & j).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sylvester Hadamard matrix of size `2^m`; even parity maps to `+1`.
pub fn hadamard(m: u32) -> Result<Array2<i8>> {
    let n = check_exponent(m)?;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| sylvester_sign(i, j)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RugSpec {
    /// `n_s = 2^m`.
    pub m: u32,
    /// Selected Hadamard columns; `n_d = subset.len()`.
    pub subset: Vec<usize>,
    /// Seed the subset was drawn from, if it was sampled.
    pub seed: Option<u64>,
}

impl RugSpec {
    /// Uniformly random `n_d`-subset of `{0, ..., 2^m - 1}`, in increasing order.
    pub fn random(m: u32, n_d: usize, seed: u64) -> Result<Self> {
        let n_s = check_exponent(m)?;
        if n_d == 0 || n_d > n_s {
            return Err(Error::invalid(format!(
                "n_d = {n_d} must lie in [1, {n_s}]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut subset = rand::seq::index::sample(&mut rng, n_s, n_d).into_vec();
        subset.sort_unstable();
        Ok(RugSpec {
            m,
            subset,
            seed: Some(seed),
        })
    }

    pub fn with_subset(m: u32, subset: Vec<usize>) -> Result<Self> {
        let spec = RugSpec {
            m,
            subset,
            seed: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// All columns; the rug is then the identity.
    pub fn full(m: u32) -> Result<Self> {
        Self::with_subset(m, (0..check_exponent(m)?).collect())
    }

    pub fn n_s(&self) -> usize {
        1 << self.m
    }

    pub fn n_d(&self) -> usize {
        self.subset.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n_s = check_exponent(self.m)?;
        if self.subset.is_empty() {
            return Err(Error::invalid("column subset is empty"));
        }
        let mut seen = vec![false; n_s];
        for &k in &self.subset {
            if k >= n_s {
                return Err(Error::invalid(format!(
                    "column {k} out of range for n_s = {n_s}"
                )));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid(format!("column {k} selected twice")));
            }
        }
        Ok(())
    }

    /// Selected Hadamard rows `H[S, :]` (equal to the columns, `H` being symmetric), as f64.
    fn selected_rows(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n_d(), self.n_s()), |(k, j)| {
            f64::from(sylvester_sign(self.subset[k], j))
        })
    }
}

/// The Persian rug matrix. Entries are exact: the integer Gram sums are
/// representable in f64 and the diagonal is exactly `n_d / n_d = 1`.
pub fn persian_rug(spec: &RugSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let rows = spec.selected_rows();
    let mut r = rows.t().dot(&rows);
    let scale = (spec.n_d() as f64).recip();
    r.mapv_inplace(|v| v * scale);
    Ok(r)
}

/// `(W_in, W_out)` with `W_in[k, :] = H[:, S_k]^T / sqrt(n_d)` and `W_out = W_in^T`.
pub fn factorize_rug(spec: &RugSpec) -> Result<(Array2<f64>, Array2<f64>)> {
    spec.validate()?;
    let scale = (spec.n_d() as f64).sqrt().recip();
    let w_in = spec.selected_rows().mapv(|v| v * scale);
    let w_out = w_in.t().as_standard_layout().into_owned();
    Ok((w_in, w_out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBound {
    pub p: f64,
    pub n_s: usize,
    pub n_d: usize,
    /// Lower bound on the mean interference variance `sigma^2`.
    pub bound_value: f64,
}

/// `sigma^2 >= (4p - 3p^2)/12 * (n_s/n_d - 1)`.
pub fn sigma_lower_bound(p: f64, n_s: usize, n_d: usize) -> Result<SigmaBound> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} is outside [0, 1]")));
    }
    if n_d == 0 || n_d > n_s {
        return Err(Error::invalid(format!(
            "need 1 <= n_d <= n_s, got n_d = {n_d}, n_s = {n_s}"
        )));
    }
    let bound_value = data_moments(p).variance * (n_s as f64 / n_d as f64 - 1.0);
    Ok(SigmaBound {
        p,
        n_s,
        n_d,
        bound_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSigma {
    /// Mean over rows of `Var(nu_i)`.
    pub variance: f64,
    pub std: f64,
}

/// Mean interference variance with each row normalized by its diagonal:
/// `(1/n_s) sum_i var(x) sum_{j != i} (W_ij / W_ii)^2`.
pub fn noise_sigma(w: ArrayView2<'_, f64>, p: f64) -> Result<NoiseSigma> {
    if w.nrows() != w.ncols() {
        return Err(Error::shape(
            "square matrix",
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} is outside [0, 1]")));
    }
    let var_x = data_moments(p).variance;
    let mut total = 0.0;
    for (i, row) in w.rows().into_iter().enumerate() {
        let d = row[i];
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { row: i });
        }
        let s: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v * v)
            .sum();
        total += s / (d * d);
    }
    let variance = var_x * total / w.nrows() as f64;
    Ok(NoiseSigma {
        variance,
        std: variance.sqrt(),
    })
}

/// Binary PGM (P5): one byte per entry, `[min, max]` mapped affinely onto `[0, 255]`.
pub fn encode_pgm(m: ArrayView2<'_, f64>) -> Vec<u8> {
    let (lo, hi) = m
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", m.ncols(), m.nrows()).into_bytes();
    out.reserve(m.len());
    out.extend(m.iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

pub fn write_pgm(m: ArrayView2<'_, f64>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(m))?;
    Ok(())
}
