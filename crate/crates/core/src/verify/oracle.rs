//! Grid-search arbitrage oracle for small pools.

use crate::arbitrage::{profit, ArbitrageResult, PriceVector, SolveStatus};
use crate::error::{CfmmError, Result};
use crate::pool::{PoolSpec, Potential, Trade, DEFAULT_FEAS_TOL};

/// Points on each side of the centre per axis and refinement level.
const HALF_WIDTH: i64 = 16;
const REFINE: f64 = 4.0;

/// Smallest last coordinate `x_n` with `ψ(x_1, …, x_n) ≥ k`, or `None` when
/// no positive value works.
pub(crate) fn frontier_last(pot: &Potential, free: &[f64], k: f64) -> Option<f64> {
    if free.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let x = match pot {
        Potential::Mean { weights } => {
            let n = weights.len();
            let log_rest: f64 = free.iter().zip(weights).map(|(x, w)| w * x.ln()).sum();
            ((k.ln() - log_rest) / weights[n - 1]).exp()
        }
        Potential::Curve { alpha, beta } => {
            let s: f64 = free.iter().sum();
            let q: f64 = free.iter().product();
            let b = k - alpha * s;
            let c = beta / q;
            if *alpha == 0.0 {
                if b >= 0.0 {
                    return None;
                }
                c / -b
            } else {
                // α x² − b x − c = 0, larger root, written to avoid cancellation
                let disc = (b * b + 4.0 * alpha * c).sqrt();
                if b >= 0.0 {
                    (b + disc) / (2.0 * alpha)
                } else {
                    2.0 * c / (disc - b)
                }
            }
        }
    };
    (x.is_finite() && x > 0.0).then_some(x)
}

/// Best arbitrage found by a coarse-to-fine grid over the fee-adjusted point.
///
/// The search runs over the first `n − 1` coordinates of `x = R + γΔ − Λ`,
/// with the last coordinate placed on the frontier. Each level evaluates a
/// `33^{n−1}` grid centred on the best point so far, then shrinks the step
/// by 4 until it is at most `grid_pitch`. The profit is concave in these
/// coordinates, so refinement around the incumbent does not lose the optimum.
///
/// `dual_lambda` is not estimated and is reported as NaN.
pub fn brute_force_arbitrage(spec: &PoolSpec, c: &PriceVector, grid_pitch: f64) -> Result<ArbitrageResult> {
    let n = spec.n();
    if n > 3 {
        return Err(CfmmError::Unsupported(format!("grid oracle refuses n = {n} (limit 3)")));
    }
    if !(grid_pitch > 0.0 && grid_pitch.is_finite()) {
        return Err(CfmmError::InvalidInput(format!("grid pitch must be positive, got {grid_pitch}")));
    }
    c.check_len(n)?;
    let g = spec.gamma();
    let r = spec.reserves().as_slice();
    let cs = c.as_slice();
    let k = spec.level().value();
    let pot = spec.potential();
    let wealth = c.dot(r);
    let m = n - 1;

    // A profitable trade pays at most cᵀR in, so xᵢ ≤ Rᵢ + γ·cᵀR/cᵢ.
    let lo: Vec<f64> = r[..m].iter().map(|ri| ri * 1e-9).collect();
    let hi: Vec<f64> = (0..m).map(|i| r[i] + g * wealth / cs[i]).collect();
    let cost = |i: usize, x: f64| {
        let d = x - r[i];
        if d > 0.0 {
            cs[i] * d / g
        } else {
            cs[i] * d
        }
    };
    let value = |free: &[f64]| -> f64 {
        match frontier_last(pot, free, k) {
            Some(last) => -(free.iter().enumerate().map(|(i, x)| cost(i, *x)).sum::<f64>() + cost(m, last)),
            None => f64::NEG_INFINITY,
        }
    };

    let mut best: Vec<f64> = r[..m].to_vec();
    let mut best_v = value(&best);
    let mut h: Vec<f64> = (0..m).map(|i| (hi[i] - lo[i]) / HALF_WIDTH as f64).collect();
    let mut idx = vec![0i64; m];
    loop {
        let centre = best.clone();
        idx.iter_mut().for_each(|j| *j = -HALF_WIDTH);
        'grid: loop {
            let p: Vec<f64> = (0..m).map(|i| (centre[i] + idx[i] as f64 * h[i]).clamp(lo[i], hi[i])).collect();
            let v = value(&p);
            if v > best_v {
                best_v = v;
                best = p;
            }
            for j in idx.iter_mut() {
                *j += 1;
                if *j <= HALF_WIDTH {
                    continue 'grid;
                }
                *j = -HALF_WIDTH;
            }
            break;
        }
        if h.iter().all(|hi| *hi <= grid_pitch) {
            break;
        }
        h.iter_mut().for_each(|hi| *hi = (*hi / REFINE).max(grid_pitch.min(*hi)));
    }

    let mut x = best.clone();
    x.push(frontier_last(pot, &best, k).unwrap_or(r[m]));
    let mut trade = Trade::zero(n);
    for i in 0..n {
        if x[i] > r[i] {
            trade.delta[i] = (x[i] - r[i]) / g;
        } else {
            trade.lambda[i] = r[i] - x[i];
        }
    }
    let p = profit(c, &trade);
    if !(p > 0.0) || !spec.trade_feasible(&trade, DEFAULT_FEAS_TOL) {
        return Ok(ArbitrageResult {
            trade: Trade::zero(n),
            post_reserves: spec.reserves().clone(),
            profit: 0.0,
            dual_lambda: f64::NAN,
            status: SolveStatus::NoTrade,
        });
    }
    let post = spec.apply_trade(&trade)?;
    Ok(ArbitrageResult { trade, post_reserves: post, profit: p, dual_lambda: f64::NAN, status: SolveStatus::Numeric })
}
