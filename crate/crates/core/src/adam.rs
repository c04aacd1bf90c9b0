//! Adam with bias correction, applied to the three parameter blocks of a [`ToyModel`].

use ndarray::{Array, Dimension, Zip};

use crate::model::{Gradients, ToyModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments<D: Dimension> {
    m: Array<f64, D>,
    v: Array<f64, D>,
}

impl<D: Dimension> Moments<D> {
    fn zeros_like(a: &Array<f64, D>) -> Self {
        Moments {
            m: Array::zeros(a.raw_dim()),
            v: Array::zeros(a.raw_dim()),
        }
    }

    fn step(&mut self, param: &mut Array<f64, D>, grad: &Array<f64, D>, cfg: &AdamConfig, t: i32) {
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let step = cfg.learning_rate / c1;
        Zip::from(param)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(grad)
            .for_each(|w, m, v, &g| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *w -= step * *m / ((*v / c2).sqrt() + cfg.eps);
            });
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    t: i32,
    w_in: Moments<ndarray::Ix2>,
    w_out: Moments<ndarray::Ix2>,
    b: Moments<ndarray::Ix1>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, model: &ToyModel) -> Self {
        Adam {
            cfg,
            t: 0,
            w_in: Moments::zeros_like(&model.w_in),
            w_out: Moments::zeros_like(&model.w_out),
            b: Moments::zeros_like(&model.b),
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, model: &mut ToyModel, grads: &Gradients) {
        self.t = self.t.saturating_add(1);
        self.w_in
            .step(&mut model.w_in, &grads.w_in, &self.cfg, self.t);
        self.w_out
            .step(&mut model.w_out, &grads.w_out, &self.cfg, self.t);
        self.b.step(&mut model.b, &grads.b, &self.cfg, self.t);
    }
}
