//! The reduced loss of a permutation-symmetric model.
//!
//! When every diagonal entry of `W` equals `a`, every bias equals `b`, and the
//! off-diagonal interference on each output is Gaussian, the per-feature loss
//! depends only on `(a, b, sigma, p)`:
//!
//! ```text
//! L     = (1 - p) L_off + p L_on
//! L_off = E[ReLU(a nu + b)^2]
//! L_on  = E[(u - ReLU(a (u + nu) + b))^2],   u ~ U[0, 1],  nu ~ N(0, sigma^2)
//! ```
//!
//! The noise mean is absorbed into `b`. Inner expectations over `nu` are
//! closed-form Gaussian ReLU moments; the remaining integral over `u` uses
//! adaptive Gauss-Legendre panels split where `a u + b` changes sign.

mod baseline;
mod gaussian;
mod montecarlo;
mod quadrature;
mod scaling;

pub use baseline::{linear_optimal_loss, linear_optimal_loss_per_feature};
pub use gaussian::{relu_moments, std_normal_cdf, std_normal_pdf};
pub use montecarlo::{empirical_macro_loss, McEstimate};
pub use quadrature::Integrator;
pub use scaling::{
    large_sigma_a, large_sigma_loss, rug_loss_curve, scaling_probe, CurvePoint, ScalingRow,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroParams {
    /// Diagonal gain.
    pub a: f64,
    /// Uniform bias, noise mean included.
    pub b: f64,
    /// Standard deviation of the interference `nu`.
    pub sigma: f64,
    pub p: f64,
}

impl MacroParams {
    pub fn new(a: f64, b: f64, sigma: f64, p: f64) -> Result<Self> {
        let params = MacroParams { a, b, sigma, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::invalid(format!(
                "a = {} must be finite and nonnegative",
                self.a
            )));
        }
        if !self.b.is_finite() {
            return Err(Error::invalid("b must be finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma = {} must be finite and nonnegative",
                self.sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid(format!("p = {} is outside [0, 1]", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub l_off: f64,
    pub l_on: f64,
}

pub fn loss_off(params: &MacroParams) -> f64 {
    relu_moments(params.b, params.a * params.sigma).1
}

pub fn loss_on(params: &MacroParams) -> f64 {
    loss_on_with(params, &Integrator::default())
}

pub fn loss_on_with(params: &MacroParams, quad: &Integrator) -> f64 {
    let &MacroParams { a, b, sigma, .. } = params;
    let s = a * sigma;
    let kink = if a > 0.0 { vec![-b / a] } else { vec![] };
    quad.integrate(0.0, 1.0, &kink, |u| {
        let (m1, m2) = relu_moments(a * u + b, s);
        (u * u - 2.0 * u * m1 + m2).max(0.0)
    })
}

pub fn loss_total(params: &MacroParams) -> LossBreakdown {
    loss_total_with(params, &Integrator::default())
}

pub fn loss_total_with(params: &MacroParams, quad: &Integrator) -> LossBreakdown {
    let l_off = loss_off(params);
    let l_on = loss_on_with(params, quad);
    LossBreakdown {
        total: (1.0 - params.p) * l_off + params.p * l_on,
        l_off,
        l_on,
    }
}

/// Regression moments in the `b = a b_hat` parametrization, where the loss is
/// `E[(x - a ReLU(x + nu + b_hat))^2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Regression {
    /// `E[x ReLU(x + nu + b_hat)]`
    cross: f64,
    /// `E[ReLU(x + nu + b_hat)^2]`
    power: f64,
}

fn regression_moments(b_hat: f64, sigma: f64, p: f64, quad: &Integrator) -> Regression {
    let kink = [-b_hat];
    let cross = p * quad.integrate(0.0, 1.0, &kink, |u| u * relu_moments(u + b_hat, sigma).0);
    let on = quad.integrate(0.0, 1.0, &kink, |u| relu_moments(u + b_hat, sigma).1);
    let off = relu_moments(b_hat, sigma).1;
    Regression {
        cross,
        power: (1.0 - p) * off + p * on,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOpt {
    pub a: f64,
    /// Set when nothing ever activates and the ratio is undefined; `a` is then 0.
    pub degenerate: bool,
}

/// Optimal gain for the reparametrized bias `b_hat = b / a`:
/// `a = E[x ReLU(x + nu + b_hat)] / E[ReLU(x + nu + b_hat)^2]`.
pub fn a_opt(b_hat: f64, sigma: f64, p: f64) -> AOpt {
    a_opt_with(b_hat, sigma, p, &Integrator::default())
}

pub fn a_opt_with(b_hat: f64, sigma: f64, p: f64, quad: &Integrator) -> AOpt {
    let r = regression_moments(b_hat, sigma, p, quad);
    if r.power <= 0.0 {
        return AOpt {
            a: 0.0,
            degenerate: true,
        };
    }
    AOpt {
        a: (r.cross / r.power).max(0.0),
        degenerate: false,
    }
}

/// Loss minimized over `a` at fixed `b_hat`: `E[x^2] - E[x ReLU]^2 / E[ReLU^2]`.
pub fn profile_loss(b_hat: f64, sigma: f64, p: f64) -> f64 {
    profile_loss_with(b_hat, sigma, p, &Integrator::default())
}

fn profile_loss_with(b_hat: f64, sigma: f64, p: f64, quad: &Integrator) -> f64 {
    let r = regression_moments(b_hat, sigma, p, quad);
    let second = p / 3.0;
    if r.power <= 0.0 {
        return second;
    }
    (second - r.cross * r.cross / r.power).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroOptimum {
    pub a: f64,
    pub b: f64,
    /// `b / a` (0 when `a` is 0).
    pub b_hat: f64,
    pub loss: LossBreakdown,
}

const GRID_POINTS: usize = 201;

/// Global minimum of the reduced loss over `a >= 0` and `b`.
///
/// `a` is eliminated exactly through [`a_opt`], leaving a one-dimensional
/// search over `b_hat`: a coarse grid on `[-10 sigma - 2, 10 sigma + 2]`,
/// a finer grid on `[-10 sigma, 10 sigma]`, then golden-section refinement
/// inside the bracket of the best grid point.
pub fn optimize_macro(sigma: f64, p: f64) -> Result<MacroOptimum> {
    optimize_macro_with(sigma, p, &Integrator::default())
}

pub fn optimize_macro_with(sigma: f64, p: f64, quad: &Integrator) -> Result<MacroOptimum> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma = {sigma} must be finite and nonnegative"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p = {p} must lie in (0, 1]")));
    }
    if sigma == 0.0 {
        // the identity map reconstructs exactly
        let loss = LossBreakdown {
            total: 0.0,
            l_off: 0.0,
            l_on: 0.0,
        };
        return Ok(MacroOptimum {
            a: 1.0,
            b: 0.0,
            b_hat: 0.0,
            loss,
        });
    }

    let outer = 10.0 * sigma + 2.0;
    let inner = 10.0 * sigma;
    let mut grid: Vec<f64> = linspace(-outer, outer, GRID_POINTS)
        .chain(linspace(-inner, inner, GRID_POINTS))
        .collect();
    grid.sort_by(f64::total_cmp);
    // the two grids share points up to rounding
    grid.dedup_by(|x, y| (*x - *y).abs() < 1e-9 * (1.0 + y.abs()));

    let f = |bh: f64| profile_loss_with(bh, sigma, p, quad);
    let values: Vec<f64> = grid.iter().map(|&bh| f(bh)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    let lo = grid[best.saturating_sub(2)];
    let hi = grid[(best + 2).min(grid.len() - 1)];
    let (mut b_hat, refined) = golden_section(f, lo, hi, 1e-12 * (1.0 + sigma));
    if values[best] < refined {
        b_hat = grid[best];
    }

    let a = a_opt_with(b_hat, sigma, p, quad).a;
    let params = MacroParams {
        a,
        b: a * b_hat,
        sigma,
        p,
    };
    Ok(MacroOptimum {
        a,
        b: params.b,
        b_hat,
        loss: loss_total_with(&params, quad),
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |k| if k == n - 1 { hi } else { lo + k as f64 * step })
}

/// Minimizes a unimodal `f` on `[lo, hi]`; returns `(argmin, min)`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
