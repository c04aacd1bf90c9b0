//! The toy autoencoder `f(x) = ReLU(W_out W_in x + b)` and its exact gradients.

use ndarray::{linalg::general_mat_mul, Array1, Array2, ArrayView2, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::datagen::SparseBatch;
use crate::error::{Error, Result};

/// Row density above which the dense GEMM path beats per-row axpy loops.
const DENSE_THRESHOLD: f64 = 0.15;

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// `W_in ~ N(0, 1/n_s)` and `W_out = W_in^T`, so every feature starts
    /// with a positive diagonal entry of `W`.
    #[default]
    Tied,
    /// Independent `W_in ~ N(0, 1/n_s)` and `W_out ~ N(0, 1/n_d)`.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    /// `n_d x n_s` encoder.
    pub w_in: Array2<f64>,
    /// `n_s x n_d` decoder.
    pub w_out: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_in: Array2<f64>,
    pub w_out: Array2<f64>,
    pub b: Array1<f64>,
}

impl ToyModel {
    pub fn from_parts(w_in: Array2<f64>, w_out: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        let (n_d, n_s) = w_in.dim();
        if w_out.dim() != (n_s, n_d) {
            return Err(Error::shape(
                format!("W_out {n_s}x{n_d}"),
                format!("{}x{}", w_out.nrows(), w_out.ncols()),
            ));
        }
        if b.len() != n_s {
            return Err(Error::shape(format!("bias of length {n_s}"), b.len()));
        }
        if n_s == 0 || n_d == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        Ok(ToyModel { w_in, w_out, b })
    }

    /// Gaussian fan-in initialization: `W_in ~ N(0, 1/n_s)`, `W_out ~ N(0, 1/n_d)`, `b = 0`.
    pub fn init(n_s: usize, n_d: usize, seed: u64) -> Result<Self> {
        Self::init_with(n_s, n_d, seed, Init::Independent)
    }

    pub fn init_with(n_s: usize, n_d: usize, seed: u64, scheme: Init) -> Result<Self> {
        if n_s == 0 || n_d == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = Normal::new(0.0, (n_s as f64).recip().sqrt()).expect("finite std");
        let w_in = Array2::from_shape_simple_fn((n_d, n_s), || enc.sample(&mut rng));
        let w_out = match scheme {
            Init::Tied => w_in.t().as_standard_layout().into_owned(),
            Init::Independent => {
                let dec = Normal::new(0.0, (n_d as f64).recip().sqrt()).expect("finite std");
                Array2::from_shape_simple_fn((n_s, n_d), || dec.sample(&mut rng))
            }
        };
        Ok(ToyModel {
            w_in,
            w_out,
            b: Array1::zeros(n_s),
        })
    }

    pub fn n_s(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn n_d(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn ratio(&self) -> f64 {
        self.n_d() as f64 / self.n_s() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.w_in
            .iter()
            .chain(self.w_out.iter())
            .chain(self.b.iter())
            .all(|v| v.is_finite())
    }

    fn check_batch(&self, batch: &SparseBatch) -> Result<()> {
        if batch.n_s() != self.n_s() {
            return Err(Error::shape(
                format!("batch width {}", self.n_s()),
                batch.n_s(),
            ));
        }
        Ok(())
    }

    /// Pre-activations `H W_out^T + b` where `H = X W_in^T`.
    fn pre_activation(&self, x: &Csr, x_dense: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let w_in_t = self.w_in.t().as_standard_layout().into_owned();
        let hidden = x.matmul(x_dense, &w_in_t.view());
        let mut pre = Array2::zeros((x.rows(), self.n_s()));
        general_mat_mul(1.0, &hidden, &self.w_out.t(), 0.0, &mut pre);
        pre += &self.b;
        (hidden, pre)
    }

    pub fn forward(&self, batch: &SparseBatch) -> Result<Array2<f64>> {
        self.check_batch(batch)?;
        let x = Csr::from_dense(batch.data.view());
        let (_, mut pre) = self.pre_activation(&x, batch.data.view());
        pre.mapv_inplace(|v| v.max(0.0));
        Ok(pre)
    }

    /// Mean over the batch of `||x - f(x)||^2`.
    pub fn loss(&self, batch: &SparseBatch) -> Result<f64> {
        let out = self.forward(batch)?;
        Ok(squared_error(&batch.data, &out) / batch.n() as f64)
    }

    /// [`ToyModel::loss`] divided by `n_s`.
    pub fn loss_per_feature(&self, batch: &SparseBatch) -> Result<f64> {
        Ok(self.loss(batch)? / self.n_s() as f64)
    }

    /// Loss and its exact gradient; the ReLU derivative at 0 is taken as 0.
    pub fn loss_and_grad(&self, batch: &SparseBatch) -> Result<(f64, Gradients)> {
        self.check_batch(batch)?;
        let n = batch.n();
        let x_view = batch.data.view();
        let x = Csr::from_dense(x_view);
        let (hidden, pre) = self.pre_activation(&x, x_view);

        // g = dL/dpre = (2/n) (ReLU(pre) - x) on active units
        let scale = 2.0 / n as f64;
        let mut loss = 0.0;
        let mut g = Array2::zeros(pre.raw_dim());
        Zip::from(&mut g)
            .and(&pre)
            .and(&batch.data)
            .for_each(|g, &z, &xv| {
                let out = z.max(0.0);
                let r = out - xv;
                loss += r * r;
                if z > 0.0 {
                    *g = scale * r;
                }
            });
        loss /= n as f64;

        let grad_b = g.sum_axis(Axis(0));
        let g_sparse = Csr::from_dense(g.view());
        // dL/dW_out = g^T H
        let grad_w_out = g_sparse.t_matmul(g.view(), hidden.view());
        // dL/dH = g W_out
        let d_hidden = g_sparse.matmul(g.view(), &self.w_out.view());
        // dL/dW_in = dH^T X = (X^T dH)^T
        let grad_w_in = x.t_matmul(x_view, d_hidden.view()).reversed_axes();

        Ok((
            loss,
            Gradients {
                w_in: grad_w_in.as_standard_layout().into_owned(),
                w_out: grad_w_out,
                b: grad_b,
            },
        ))
    }
}

pub(crate) fn squared_error(x: &Array2<f64>, out: &Array2<f64>) -> f64 {
    Zip::from(x)
        .and(out)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
}

/// Compressed sparse rows of a dense matrix, used to skip zeros in products.
#[derive(Debug)]
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    cols: usize,
}

impl Csr {
    fn from_dense(m: ArrayView2<'_, f64>) -> Self {
        let mut indptr = Vec::with_capacity(m.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in m.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr {
            indptr,
            indices,
            values,
            cols: m.ncols(),
        }
    }

    fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    fn density(&self) -> f64 {
        self.values.len() as f64 / (self.rows() * self.cols).max(1) as f64
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// `self * rhs`; `dense` is the same matrix in dense form.
    fn matmul(&self, dense: ArrayView2<'_, f64>, rhs: &ArrayView2<'_, f64>) -> Array2<f64> {
        if self.density() > DENSE_THRESHOLD {
            return dense.dot(rhs);
        }
        let mut out = Array2::zeros((self.rows(), rhs.ncols()));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &rhs.row(j));
            }
        }
        out
    }

    /// `self^T * rhs`.
    fn t_matmul(&self, dense: ArrayView2<'_, f64>, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        if self.density() > DENSE_THRESHOLD {
            return dense.t().dot(&rhs);
        }
        let mut out = Array2::zeros((self.cols, rhs.ncols()));
        for i in 0..self.rows() {
            let src = rhs.row(i);
            for (j, v) in self.row(i) {
                out.row_mut(j).scaled_add(v, &src);
            }
        }
        out
    }
}
