//! Value of a pool's reserves at reference prices `c`:
//!
//! ```text
//! V(R, c) = min cᵀR′  subject to  ψ(R′) ≥ ψ(R)
//! ```
//!
//! The Lagrange dual is `g(λ) = λk − λ·(−ψ)*(−c/λ)` with `k = ψ(R)`, which is
//! concave in `λ ≥ 0` and has no duality gap since ψ is concave and `R` is
//! strictly feasible.

use serde::Serialize;

use crate::arbitrage::{mean_feeless_point, solve_arbitrage_feeless, PriceVector};
use crate::error::{CfmmError, Result};
use crate::numeric::{golden_section_max, ExtReal};
use crate::pool::{PoolKind, PoolSpec, Potential};

/// Relative slack for the boundary of the geometric-mean conjugate's domain.
const GEOMEAN_DOMAIN_SLACK: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValueMethod {
    ClosedFormMean,
    DualNumeric,
    PrimalNumeric,
    LowerBoundOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReserveValueResult {
    pub value: f64,
    /// Maximizer of the dual, when the dual was used.
    pub dual_lambda: Option<f64>,
    pub method: ValueMethod,
    /// Value of the primal problem, when it was also computed.
    pub primal_value: Option<f64>,
    /// `|dual − primal| / |primal|`, when both are known.
    pub duality_gap: Option<f64>,
    /// `(k/α)·min c` for Curve pools with `α > 0`.
    pub lower_bound: Option<f64>,
}

/// Conjugate of `x ↦ −∏xᵢ^{wᵢ}`: zero when `y ≤ 0` and `∏(−yᵢ/wᵢ)^{wᵢ} ≥ 1`,
/// `+∞` otherwise.
pub fn conjugate_neg_geomean(y: &[f64], weights: &[f64]) -> ExtReal {
    if y.iter().any(|v| !(*v < 0.0)) {
        return ExtReal::PosInf;
    }
    let log_prod: f64 = y.iter().zip(weights).map(|(y, w)| w * (-y / w).ln()).sum();
    if log_prod >= -GEOMEAN_DOMAIN_SLACK {
        ExtReal::Finite(0.0)
    } else {
        ExtReal::PosInf
    }
}

/// Conjugate of `x ↦ 1/∏xᵢ` on the positive orthant:
/// `−(n+1)·(∏(−yᵢ))^{1/(n+1)}` for `y ≤ 0`, `+∞` otherwise.
pub fn conjugate_reciprocal_product(y: &[f64]) -> ExtReal {
    if y.iter().any(|v| v.is_nan() || *v > 0.0) {
        return ExtReal::PosInf;
    }
    if y.contains(&0.0) {
        return ExtReal::Finite(0.0);
    }
    let n = y.len() as f64;
    let log_prod: f64 = y.iter().map(|v| (-v).ln()).sum();
    ExtReal::Finite(-(n + 1.0) * (log_prod / (n + 1.0)).exp())
}

/// Conjugate of `−ψ` for a Curve pool: `β·f*((y + α)/β)` with `f = 1/∏x`.
pub fn conjugate_neg_curve(y: &[f64], alpha: f64, beta: f64) -> ExtReal {
    let z: Vec<f64> = y.iter().map(|v| (v + alpha) / beta).collect();
    conjugate_reciprocal_product(&z).scale(beta)
}

fn conjugate_neg_psi(pot: &Potential, y: &[f64]) -> ExtReal {
    match pot {
        Potential::Mean { weights } => conjugate_neg_geomean(y, weights),
        Potential::Curve { alpha, beta } => conjugate_neg_curve(y, *alpha, *beta),
    }
}

/// Dual function `g(λ) = λk − λ·(−ψ)*(−c/λ)`, with `g(0) = 0`.
pub fn dual_g(spec: &PoolSpec, k: f64, c: &PriceVector, lambda: f64) -> Result<ExtReal> {
    c.check_len(spec.n())?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CfmmError::InvalidInput(format!("dual variable must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(ExtReal::Finite(0.0));
    }
    let y: Vec<f64> = c.as_slice().iter().map(|ci| -ci / lambda).collect();
    Ok(match conjugate_neg_psi(spec.potential(), &y) {
        ExtReal::Finite(v) => ExtReal::Finite(lambda * k - lambda * v),
        ExtReal::PosInf => ExtReal::NegInf,
        ExtReal::NegInf => ExtReal::PosInf,
    })
}

/// `(k/α)·min c`: holding `k/α` units of the cheapest coin is never cheaper
/// than the reserves, since `ψ ≤ αΣx`.
pub fn curve_value_lower_bound(spec: &PoolSpec, c: &PriceVector) -> Result<f64> {
    let Some((alpha, _)) = spec.curve_params() else {
        return Err(CfmmError::Unsupported(format!(
            "the linear lower bound applies to curve pools, not {}",
            spec.kind().as_str()
        )));
    };
    c.check_len(spec.n())?;
    if alpha == 0.0 {
        return Err(CfmmError::InvalidInput("the linear lower bound needs alpha > 0".into()));
    }
    let cmin = c.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(spec.level().value() / alpha * cmin)
}

/// Reserve value with the default method: the closed form for mean pools and
/// the dual maximized numerically for Curve pools, cross-checked against the
/// primal solve.
pub fn reserve_value(spec: &PoolSpec, c: &PriceVector) -> Result<ReserveValueResult> {
    match spec.kind() {
        PoolKind::Product | PoolKind::Mean => reserve_value_with(spec, c, ValueMethod::ClosedFormMean),
        PoolKind::Curve => reserve_value_with(spec, c, ValueMethod::DualNumeric),
    }
}

pub fn reserve_value_with(spec: &PoolSpec, c: &PriceVector, method: ValueMethod) -> Result<ReserveValueResult> {
    c.check_len(spec.n())?;
    let k = spec.level().value();
    let blank = ReserveValueResult {
        value: f64::NAN,
        dual_lambda: None,
        method,
        primal_value: None,
        duality_gap: None,
        lower_bound: None,
    };
    match method {
        ValueMethod::ClosedFormMean => {
            let Potential::Mean { weights } = spec.potential() else {
                return Err(CfmmError::Unsupported("the closed form applies to mean pools only".into()));
            };
            // k·∏(cᵢ/wᵢ)^{wᵢ}
            let (_, lambda) = mean_feeless_point(weights, c.as_slice(), k);
            Ok(ReserveValueResult { value: k * lambda, dual_lambda: Some(lambda), ..blank })
        }
        ValueMethod::PrimalNumeric => {
            let res = solve_arbitrage_feeless(&spec.without_fee(), c)?;
            let v = c.dot(res.post_reserves.as_slice());
            Ok(ReserveValueResult { value: v, primal_value: Some(v), ..blank })
        }
        ValueMethod::LowerBoundOnly => {
            let lb = curve_value_lower_bound(spec, c)?;
            Ok(ReserveValueResult { value: lb, lower_bound: Some(lb), ..blank })
        }
        ValueMethod::DualNumeric => {
            let (lambda, value) = match spec.potential() {
                Potential::Mean { .. } => maximize_mean_dual(spec, k, c)?,
                Potential::Curve { alpha, .. } => maximize_curve_dual(spec, k, c, *alpha)?,
            };
            let primal = solve_arbitrage_feeless(&spec.without_fee(), c)?;
            let pv = c.dot(primal.post_reserves.as_slice());
            let gap = (value - pv).abs() / pv.abs().max(f64::MIN_POSITIVE);
            let lower_bound = match spec.curve_params() {
                Some((a, _)) if a > 0.0 => Some(curve_value_lower_bound(spec, c)?),
                _ => None,
            };
            Ok(ReserveValueResult {
                value,
                dual_lambda: Some(lambda),
                primal_value: Some(pv),
                duality_gap: Some(gap),
                lower_bound,
                ..blank
            })
        }
    }
}

fn g_real(spec: &PoolSpec, k: f64, c: &PriceVector, lambda: f64) -> f64 {
    match dual_g(spec, k, c, lambda) {
        Ok(ExtReal::Finite(v)) => v,
        Ok(ExtReal::PosInf) => f64::MAX,
        _ => -f64::MAX,
    }
}

/// For mean pools `g(λ) = λk` on its domain, so the dual optimum is the edge
/// of the domain; find it by bisection.
fn maximize_mean_dual(spec: &PoolSpec, k: f64, c: &PriceVector) -> Result<(f64, f64)> {
    let finite = |l: f64| matches!(dual_g(spec, k, c, l), Ok(ExtReal::Finite(_)));
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut moves = 0;
    while finite(hi) {
        lo = hi;
        hi *= 2.0;
        moves += 1;
        if moves > 2000 {
            return Err(CfmmError::Numerical("mean dual domain not bounded".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if finite(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, lo * k))
}

fn maximize_curve_dual(spec: &PoolSpec, k: f64, c: &PriceVector, alpha: f64) -> Result<(f64, f64)> {
    let g = |l: f64| g_real(spec, k, c, l);
    let hi = if alpha > 0.0 {
        c.as_slice().iter().cloned().fold(f64::INFINITY, f64::min) / alpha
    } else {
        // g is concave with g(0) = 0; double until it stops increasing
        let mut hi = 1.0;
        let mut moves = 0;
        while g(2.0 * hi) > g(hi) {
            hi *= 2.0;
            moves += 1;
            if moves > 2000 {
                return Err(CfmmError::Numerical("Curve dual has no bounded maximizer".into()));
            }
        }
        2.0 * hi
    };
    let best = golden_section_max(g, 0.0, hi, 1e-10, 500).map_err(|e| {
        CfmmError::Numerical(format!("Curve dual maximization on [0, {hi}] failed: {e}"))
    })?;
    Ok((best.x, best.value))
}
