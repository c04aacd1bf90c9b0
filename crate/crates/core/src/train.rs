//! Adam training on fresh batches with a windowed stopping rule.
//!
//! Training runs in blocks of `window` steps. Once two full blocks exist, it
//! stops as soon as the mean loss of the latest block is not lower than the
//! mean of the block before it, or when `max_steps` is reached.

use log::debug;

use crate::adam::{Adam, AdamConfig};
use crate::datagen::{BatchSampler, DataConfig};
use crate::error::{Error, Result};
use crate::model::{Init, ToyModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub window: usize,
    pub max_steps: usize,
    pub init: Init,
    /// Seeds the weight initialization; batches come from the data seed.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 1024,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            window: 100,
            max_steps: 100_000,
            init: Init::Tied,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.window == 0 || self.max_steps == 0 {
            return Err(Error::invalid(
                "batch_size, window and max_steps must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        for (name, beta) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::invalid(format!(
                    "adam {name} = {beta} must lie in (0, 1)"
                )));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps < 0.0 {
            return Err(Error::invalid("adam eps must be nonnegative"));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps_taken: usize,
    /// Mean per-feature batch loss over the final window.
    pub final_loss_per_feature: f64,
    /// `(step, mean per-feature batch loss over the window ending at step)`.
    pub loss_trace: Vec<(usize, f64)>,
    /// False when `max_steps` ended training before the stopping rule fired.
    pub converged: bool,
}

pub fn train(
    data_cfg: &DataConfig,
    n_d: usize,
    cfg: &TrainConfig,
) -> Result<(ToyModel, TrainReport)> {
    let model = ToyModel::init_with(data_cfg.n_s, n_d, cfg.seed, cfg.init)?;
    train_from(model, data_cfg, cfg)
}

/// Continues training `model` under the same protocol as [`train`].
pub fn train_from(
    mut model: ToyModel,
    data_cfg: &DataConfig,
    cfg: &TrainConfig,
) -> Result<(ToyModel, TrainReport)> {
    cfg.validate()?;
    if model.n_s() != data_cfg.n_s {
        return Err(Error::shape(
            format!("model with n_s = {}", data_cfg.n_s),
            model.n_s(),
        ));
    }
    let mut sampler = BatchSampler::new(*data_cfg)?;
    let mut opt = Adam::new(cfg.adam(), &model);
    let n_s = model.n_s() as f64;
    let w = cfg.window;

    let mut block_sum = 0.0;
    let mut previous_block: Option<f64> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut steps = 0;

    while steps < cfg.max_steps {
        let batch = sampler.next_batch(cfg.batch_size);
        let (loss, grads) = model.loss_and_grad(&batch)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { step: steps, loss });
        }
        opt.step(&mut model, &grads);
        steps += 1;
        block_sum += loss / n_s;

        if steps % w == 0 {
            let block = block_sum / w as f64;
            block_sum = 0.0;
            trace.push((steps, block));
            debug!("step {steps}: window loss per feature {block:.6e}");
            if let Some(prev) = previous_block {
                if block >= prev {
                    converged = true;
                    break;
                }
            }
            previous_block = Some(block);
        }
    }
    if !model.is_finite() {
        return Err(Error::Diverged {
            step: steps,
            loss: f64::NAN,
        });
    }

    let final_loss_per_feature = match trace.last() {
        Some(&(s, l)) if s == steps => l,
        // partial trailing block when max_steps is not a multiple of the window
        _ => block_sum / (steps % w).max(1) as f64,
    };
    Ok((
        model,
        TrainReport {
            steps_taken: steps,
            final_loss_per_feature,
            loss_trace: trace,
            converged,
        },
    ))
}
