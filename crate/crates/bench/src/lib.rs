//! Benchmark fixtures shared by the criterion targets.

use tmsae::adam::{Adam, AdamConfig};
use tmsae::{sample_batch, DataConfig, Init, SparseBatch, ToyModel};

/// A tied-init model with a trained-like negative bias, plus one batch.
pub fn training_fixture(n_s: usize, r: f64, p: f64) -> (ToyModel, Adam, SparseBatch) {
    let n_d = ((n_s as f64) * r).round() as usize;
    let mut model = ToyModel::init_with(n_s, n_d, 1, Init::Tied).expect("valid sizes");
    model.b.fill(-0.2);
    let adam = Adam::new(AdamConfig::default(), &model);
    let batch =
        sample_batch(&DataConfig::new(p, n_s, 2).expect("valid p"), 1024).expect("nonempty");
    (model, adam, batch)
}
