//! The monotone trading function `φ′(Δ, Λ) = dist((Δ, Λ), T(R))²` and the
//! relaxed arbitrage problem built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::arbitrage::PriceVector;
use crate::error::{CfmmError, Result};
use crate::frontier::{self, nearest_pair, CoinCost};
use crate::numeric::golden_section_max;
use crate::pool::{PoolSpec, Trade, DEFAULT_FEAS_TOL};
use crate::verify::report::Report;

/// Squared Euclidean distance from `(Δ, Λ)` to the trading set
/// `T(R) = {(Δ′, Λ′) ≥ 0 : ψ(R + γΔ′ − Λ′) ≥ ψ(R)}`. The offset `d(0, T(R))`
/// vanishes because the zero trade is always feasible.
///
/// For a fixed fee-adjusted point `x`, the nearest pair is found coin by coin,
/// so the projection reduces to minimizing a separable convex function of `x`
/// over `ψ(x) ≥ k`. The projected trade is checked against `T(R)` with
/// tolerance `proj_tol`.
pub fn monotone_phi(spec: &PoolSpec, trade: &Trade, proj_tol: f64) -> Result<f64> {
    if !(proj_tol > 0.0) {
        return Err(CfmmError::InvalidInput(format!("projection tolerance must be positive, got {proj_tol}")));
    }
    if trade.len() != spec.n() {
        return Err(CfmmError::InvalidInput(format!("trade has {} coins, pool has {}", trade.len(), spec.n())));
    }
    if trade.delta.iter().chain(&trade.lambda).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(CfmmError::InvalidInput("trade entries must be finite and nonnegative".into()));
    }
    if spec.trade_feasible(trade, 0.0) {
        return Ok(0.0);
    }
    let g = spec.gamma();
    let r = spec.reserves().as_slice();
    let costs: Vec<CoinCost> = (0..spec.n())
        .map(|i| CoinCost::Projection { base: r[i], input: trade.delta[i], output: trade.lambda[i], gamma: g })
        .collect();
    let sol = frontier::solve(spec.potential(), &costs, spec.level().value())?;
    let mut nearest = Trade::zero(spec.n());
    let mut dist2 = 0.0;
    for i in 0..spec.n() {
        let (d, l) = nearest_pair(sol.x[i] - r[i], trade.delta[i], trade.lambda[i], g);
        nearest.delta[i] = d;
        nearest.lambda[i] = l;
        dist2 += (d - trade.delta[i]).powi(2) + (l - trade.lambda[i]).powi(2);
    }
    if !spec.trade_feasible(&nearest, proj_tol.max(DEFAULT_FEAS_TOL)) {
        return Err(CfmmError::Numerical(format!(
            "projection of {:?}/{:?} left the trading set: x = {:?}, psi = {}, k = {}, nearest = {:?}",
            trade.delta, trade.lambda, sol.x, spec.potential().value(&sol.x), spec.level().value(), nearest
        )));
    }
    Ok(dist2)
}

fn random_trade(spec: &PoolSpec, rng: &mut impl Rng) -> Trade {
    let r = spec.reserves().as_slice();
    let mut t = Trade::zero(spec.n());
    for i in 0..spec.n() {
        if rng.random_bool(0.5) {
            t.delta[i] = rng.random_range(0.0..0.6) * r[i];
        }
        if rng.random_bool(0.5) {
            t.lambda[i] = rng.random_range(0.0..0.6) * r[i];
        }
    }
    t
}

/// Checks on random trades that φ′ is nonincreasing in inputs, nondecreasing
/// in outputs, zero exactly on feasible trades and midpoint convex.
pub fn check_monotone_phi(spec: &PoolSpec, num_samples: usize, rng_seed: u64) -> Result<Report> {
    const PROJ_TOL: f64 = 1e-9;
    let n = spec.n();
    let parts: Vec<Report> = (0..num_samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = rng_seed.wrapping_add(i);
            let mut rep = Report::new("monotone_phi");
            rep.samples = 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_trade(spec, &mut rng);
            let other = random_trade(spec, &mut rng);
            let coin = rng.random_range(0..n);
            let step = rng.random_range(0.0..0.3) * spec.reserves()[coin];
            let mut more_in = t.clone();
            more_in.delta[coin] += step;
            let mut more_out = t.clone();
            more_out.lambda[coin] += step;
            let mid = Trade {
                delta: t.delta.iter().zip(&other.delta).map(|(a, b)| 0.5 * (a + b)).collect(),
                lambda: t.lambda.iter().zip(&other.lambda).map(|(a, b)| 0.5 * (a + b)).collect(),
            };
            let eval = |tr: &Trade| monotone_phi(spec, tr, PROJ_TOL);
            let inputs = json!({"trade": t, "other": other, "coin": coin, "step": step});
            let vals = (eval(&t), eval(&more_in), eval(&more_out), eval(&other), eval(&mid));
            let (Ok(phi), Ok(phi_in), Ok(phi_out), Ok(phi_other), Ok(phi_mid)) = vals else {
                rep.fail(seed, inputs, json!("projection failed"), json!(null));
                return rep;
            };
            let tol = 1e-9 * (1.0 + phi);
            if phi_in > phi + tol {
                rep.fail(seed, inputs.clone(), json!({"phi_more_input": phi_in}), json!({"phi": phi}));
            }
            if phi_out < phi - tol {
                rep.fail(seed, inputs.clone(), json!({"phi_more_output": phi_out}), json!({"phi": phi}));
            }
            if (phi == 0.0) != spec.trade_feasible(&t, 0.0) {
                rep.fail(seed, inputs.clone(), json!({"phi": phi}), json!("zero iff feasible"));
            }
            let avg = 0.5 * (phi + phi_other);
            rep.record_max("max_convexity_excess", phi_mid - avg);
            if phi_mid > avg + 1e-6 {
                rep.fail(seed, inputs, json!({"phi_mid": phi_mid}), json!({"average_plus_tol": avg + 1e-6}));
            }
            rep
        })
        .collect();
    let mut out = Report::new("monotone_phi");
    for p in parts {
        out.merge(p);
    }
    Ok(out)
}

/// Two-coin arbitrage with the constraint `φ′(Δ, Λ) ≤ proj_tol²`, i.e. trades
/// within distance `proj_tol` of the trading set. Each coin is tried as the
/// sole input; the output bought for a given input is found by bisection and
/// the input by golden-section search.
pub fn relaxed_arbitrage(spec: &PoolSpec, c: &PriceVector, proj_tol: f64) -> Result<f64> {
    if spec.n() != 2 {
        return Err(CfmmError::Unsupported("relaxed arbitrage is implemented for two coins".into()));
    }
    c.check_len(2)?;
    let cs = c.as_slice();
    let r = spec.reserves().as_slice();
    let limit = proj_tol * proj_tol;
    let mut best = 0.0f64;
    for (i, j) in [(0usize, 1usize), (1, 0)] {
        let trade = |a: f64, b: f64| {
            let mut t = Trade::zero(2);
            t.delta[i] = a;
            t.lambda[j] = b;
            t
        };
        let max_out = |a: f64| -> Result<f64> {
            let (mut lo, mut hi) = (0.0, r[j] + 2.0 * proj_tol);
            while monotone_phi(spec, &trade(a, hi), proj_tol)? <= limit {
                hi *= 2.0;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if monotone_phi(spec, &trade(a, mid), proj_tol)? <= limit {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            Ok(lo)
        };
        let err = std::cell::RefCell::new(None);
        let objective = |a: f64| match max_out(a) {
            Ok(b) => cs[j] * b - cs[i] * a,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let a_max = c.dot(r) / cs[i];
        let res = golden_section_max(objective, 0.0, a_max, 1e-10, 400);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        best = best.max(res?.value);
    }
    Ok(best)
}
