//! Adaptive composite Gauss-Legendre integration on finite intervals.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussLegendre,
    /// Absolute error target for the whole integral.
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::new(20, 1e-13)
    }
}

impl Integrator {
    /// `degree` nodes per panel; panels are bisected until two levels agree within `tol`.
    pub fn new(degree: usize, tol: f64) -> Self {
        let degree = NonZeroUsize::new(degree.max(2)).expect("nonzero");
        Integrator {
            rule: GaussLegendre::new(degree),
            tol,
            max_depth: 24,
        }
    }

    pub fn degree(&self) -> usize {
        self.rule.degree()
    }

    /// Integrates `f` over `[a, b]`, splitting first at every point of `breaks` inside the interval.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, breaks: &[f64], mut f: F) -> f64 {
        let mut points = vec![a];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(f64::total_cmp);
        points.extend(inner);
        points.push(b);
        let share = self.tol / (points.len() - 1) as f64;
        points
            .windows(2)
            .map(|w| {
                let whole = self.rule.integrate(w[0], w[1], &mut f);
                self.refine(w[0], w[1], whole, share, 0, &mut f)
            })
            .sum()
    }

    fn refine<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        f: &mut F,
    ) -> f64 {
        let mid = 0.5 * (a + b);
        let left = self.rule.integrate(a, mid, &mut *f);
        let right = self.rule.integrate(mid, b, &mut *f);
        let halves = left + right;
        // the second test stops once the difference is pure roundoff
        let err = (halves - whole).abs();
        if err <= tol
            || err <= 64.0 * f64::EPSILON * (left.abs() + right.abs())
            || depth >= self.max_depth
        {
            return halves;
        }
        self.refine(a, mid, left, 0.5 * tol, depth + 1, f)
            + self.refine(mid, b, right, 0.5 * tol, depth + 1, f)
    }
}
