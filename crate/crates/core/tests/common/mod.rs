//! Reference implementations used to check the library from the outside.
//! Everything here is written from the formulas directly and does not call
//! into the crate's solvers.

#![allow(dead_code)]

use rand::Rng;

#[derive(Debug, Clone)]
pub enum Pot {
    Mean(Vec<f64>),
    Curve { alpha: f64, beta: f64 },
}

impl Pot {
    pub fn psi(&self, x: &[f64]) -> f64 {
        match self {
            Pot::Mean(w) => x.iter().zip(w).map(|(xi, wi)| xi.powf(*wi)).product(),
            Pot::Curve { alpha, beta } => {
                alpha * x.iter().sum::<f64>() - beta / x.iter().product::<f64>()
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Pot::Mean(w) => {
                let p = self.psi(x);
                x.iter().zip(w).map(|(xi, wi)| wi * p / xi).collect()
            }
            Pot::Curve { alpha, beta } => {
                let p: f64 = x.iter().product();
                x.iter().map(|xi| alpha + beta / (p * xi)).collect()
            }
        }
    }

    /// Last coordinate that puts `(free, y)` on the level set `ψ = k`.
    pub fn solve_last(&self, free: &[f64], k: f64) -> Option<f64> {
        match self {
            Pot::Mean(w) => {
                let n = w.len();
                let head: f64 = free.iter().zip(w).map(|(xi, wi)| xi.powf(*wi)).product();
                let y = (k / head).powf(1.0 / w[n - 1]);
                (y.is_finite() && y > 0.0).then_some(y)
            }
            Pot::Curve { alpha, beta } => {
                // α·y² + (α·S − k)·y − β/P = 0
                let s: f64 = free.iter().sum();
                let p: f64 = free.iter().product();
                let b = alpha * s - k;
                let c = beta / p;
                let disc = (b * b + 4.0 * alpha * c).sqrt();
                let y = if b > 0.0 { 2.0 * c / (b + disc) } else if *alpha > 0.0 { (disc - b) / (2.0 * alpha) } else { return None };
                (y.is_finite() && y > 0.0).then_some(y)
            }
        }
    }
}

/// Minimizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb { (a, fa) } else { (b, fb) }
}

/// `min cᵀx` over `ψ(x) ≥ ψ(r)`, by nested golden-section searches over the
/// logarithms of the first n−1 coordinates. The last coordinate is solved
/// from the level equation.
pub fn primal_value(pot: &Pot, c: &[f64], r: &[f64]) -> f64 {
    let k = pot.psi(r);
    let wealth: f64 = c.iter().zip(r).map(|(a, b)| a * b).sum();
    let n = c.len();
    let mut prefix = Vec::with_capacity(n);
    nested(pot, c, k, wealth, n, &mut prefix)
}

fn nested(pot: &Pot, c: &[f64], k: f64, wealth: f64, n: usize, prefix: &mut Vec<f64>) -> f64 {
    let d = prefix.len();
    if d == n - 1 {
        return match pot.solve_last(prefix, k) {
            Some(y) => prefix.iter().zip(c).map(|(x, ci)| x * ci).sum::<f64>() + c[n - 1] * y,
            None => f64::INFINITY,
        };
    }
    let hi = (wealth / c[d]).ln();
    let (_, v) = golden_min(
        |u| {
            prefix.push(u.exp());
            let v = nested(pot, c, k, wealth, n, prefix);
            prefix.pop();
            v
        },
        hi - 30.0,
        hi,
        1e-11,
    );
    v
}

/// Coarse-to-fine grid search for the supremum of a concave function on the
/// box `[lo, hi]ⁿ`.
pub fn grid_sup(f: impl Fn(&[f64]) -> f64, n: usize, lo: f64, hi: f64) -> f64 {
    const M: usize = 21;
    let mut center = vec![(lo + hi) / 2.0; n];
    let mut half = (hi - lo) / 2.0;
    let mut best = f64::NEG_INFINITY;
    let mut x = vec![0.0; n];
    while half > 1e-10 {
        let step = 2.0 * half / (M - 1) as f64;
        let mut arg = center.clone();
        let total = M.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = (center[i] - half + step * (rem % M) as f64).clamp(lo, hi);
                rem /= M;
            }
            let v = f(&x);
            if v > best {
                best = v;
                arg.clone_from(&x);
            }
        }
        center = arg;
        half = 2.0 * step;
    }
    best
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}
