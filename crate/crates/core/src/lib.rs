//! Training, analysis and forward-engineering of the sparse ReLU autoencoder
//! `f(x) = ReLU(W_out W_in x + b)` on sparse i.i.d. data.
//!
//! * [`datagen`]: the sparse data distribution and its exact moments.
//! * [`model`], [`adam`], [`train`], [`weights`]: the model, exact gradients,
//!   Adam training with a windowed stopping rule, and TMSW weight files.
//! * [`stats`]: permutation-symmetry diagnostics of `W = W_out W_in`.
//! * [`rug`]: Hadamard matrices, Persian rug weights and the noise-variance bound.
//! * [`analytic`]: the reduced `(a, b, sigma, p)` loss, its optimization,
//!   the linear baseline and high-sparsity scaling probes.

pub mod adam;
pub mod analytic;
pub mod datagen;
pub mod error;
pub mod model;
pub mod rug;
pub mod stats;
pub mod train;
pub mod weights;

pub use analytic::{
    a_opt, linear_optimal_loss, loss_total, optimize_macro, rug_loss_curve, scaling_probe,
    LossBreakdown, MacroOptimum, MacroParams,
};
pub use datagen::{data_moments, sample_batch, DataConfig, Moments, SparseBatch};
pub use error::{Error, Result};
pub use model::{Gradients, Init, ToyModel};
pub use rug::{factorize_rug, hadamard, noise_sigma, persian_rug, sigma_lower_bound, RugSpec};
pub use stats::{stats_report, EffectiveStats, LyapunovStat};
pub use train::{train, TrainConfig, TrainReport};
pub use weights::{load_model, save_model};
