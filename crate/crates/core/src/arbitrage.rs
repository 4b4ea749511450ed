//! Optimal arbitrage against an infinitely liquid reference market:
//! maximize `cᵀ(Λ − Δ)` over the pool's trading set.

use serde::Serialize;

use crate::error::{CfmmError, Result};
use crate::frontier::{self, CoinCost};
use crate::numeric::{bracket_increasing, brent, saturate};
use crate::pool::{PoolSpec, Potential, Reserves, Trade, DEFAULT_FEAS_TOL};

/// Moves smaller than this (relative to each reserve) are reported as no trade.
pub const NO_TRADE_REL_MOVE: f64 = 1e-12;

/// Strictly positive reference-market prices, one per coin.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(CfmmError::InvalidInput("price vector is empty".into()));
        }
        if let Some((i, v)) = c.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(CfmmError::InvalidInput(format!("price {i} must be finite and positive, got {v}")));
        }
        Ok(PriceVector(c))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        PriceVector::new(self.0.iter().map(|v| v * s).collect())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(CfmmError::InvalidInput(format!(
                "expected {n} prices, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    ClosedForm,
    Numeric,
    NoTrade,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArbitrageResult {
    pub trade: Trade,
    pub post_reserves: Reserves,
    /// `cᵀ(Λ − Δ)` in numéraire units.
    pub profit: f64,
    /// Scaling of the supporting hyperplane: `c ∈ λ·∂ψ` at the fee-adjusted
    /// post-trade point.
    pub dual_lambda: f64,
    pub status: SolveStatus,
}

/// `cᵀΛ − cᵀΔ`.
pub fn profit(c: &PriceVector, trade: &Trade) -> f64 {
    c.dot(&trade.lambda) - c.dot(&trade.delta)
}

/// Optimal arbitrage for a pool without fees.
///
/// Mean pools use the closed form `R′ⱼ = k·(wⱼ/cⱼ)·∏ᵢ(cᵢ/wᵢ)^{wᵢ}`. Curve
/// pools solve `c = λ∇ψ(R′)` for `R′` at fixed `λ`
/// (`R′ⱼ = β/(P·(cⱼ/λ − α))` with `P^{n+1} = βⁿ/∏(cⱼ/λ − α)`) and find `λ`
/// from `ψ(R′(λ)) = k` by root finding.
pub fn solve_arbitrage_feeless(spec: &PoolSpec, c: &PriceVector) -> Result<ArbitrageResult> {
    if spec.gamma() != 1.0 {
        return Err(CfmmError::InvalidInput(format!(
            "fee-less solver called with gamma = {}",
            spec.gamma()
        )));
    }
    c.check_len(spec.n())?;
    let k = spec.level().value();
    let (x, lambda, status) = match spec.potential() {
        Potential::Mean { weights } => {
            let (x, lambda) = mean_feeless_point(weights, c.as_slice(), k);
            (x, lambda, SolveStatus::ClosedForm)
        }
        Potential::Curve { alpha, beta } => {
            let (x, lambda) = curve_feeless_point(*alpha, *beta, c.as_slice(), k)?;
            (x, lambda, SolveStatus::Numeric)
        }
    };
    finish(spec, c, &x, lambda, status)
}

/// `(R′, λ)` of the closed-form constant-mean optimum at level `k`.
pub(crate) fn mean_feeless_point(weights: &[f64], c: &[f64], k: f64) -> (Vec<f64>, f64) {
    let log_lambda: f64 = weights.iter().zip(c).map(|(w, c)| w * (c / w).ln()).sum();
    let lambda = log_lambda.exp();
    let x = weights.iter().zip(c).map(|(w, c)| k * w / c * lambda).collect();
    (x, lambda)
}

/// Stationary point of `cᵀx − λψ(x)` for Curve at a given `λ`, in logs.
fn curve_stationary(alpha: f64, beta: f64, c: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let n = c.len() as f64;
    let mut log_d = Vec::with_capacity(c.len());
    for ci in c {
        let d = ci / lambda - alpha;
        if !(d > 0.0) {
            return None;
        }
        log_d.push(d.ln());
    }
    let log_p = (n * beta.ln() - log_d.iter().sum::<f64>()) / (n + 1.0);
    Some(log_d.iter().map(|ld| (beta.ln() - log_p - ld).exp()).collect())
}

fn curve_feeless_point(alpha: f64, beta: f64, c: &[f64], k: f64) -> Result<(Vec<f64>, f64)> {
    let pot = Potential::Curve { alpha, beta };
    let cap = if alpha > 0.0 { c.iter().cloned().fold(f64::INFINITY, f64::min) / alpha } else { f64::INFINITY };
    let lambda_of = |v: f64| if cap.is_finite() { cap / (1.0 + (-v).exp()) } else { v.exp() };
    // ψ(R′(λ)) − k is nondecreasing in λ
    let f = |v: f64| {
        let lambda = lambda_of(v);
        if lambda <= 0.0 {
            return -f64::MAX;
        }
        match curve_stationary(alpha, beta, c, lambda) {
            Some(x) => saturate(pot.value(&x) - k),
            None => f64::MAX,
        }
    };
    let br = bracket_increasing(f, 0.0, 1.0, 200).map_err(|e| {
        CfmmError::Numerical(format!("Curve multiplier not bracketed in (0, {cap}): {e}"))
    })?;
    let v = brent(f, br, 1e-14, 400)?;
    let mut lambda = lambda_of(v);
    let mut back = v;
    let mut x = curve_stationary(alpha, beta, c, lambda);
    for _ in 0..64 {
        if x.is_some() {
            break;
        }
        back -= 1e-12 * back.abs().max(1.0);
        lambda = lambda_of(back);
        x = curve_stationary(alpha, beta, c, lambda);
    }
    let x = x.ok_or_else(|| CfmmError::Numerical(format!("Curve multiplier {lambda} reached its cap {cap}")))?;
    Ok((x, lambda))
}

/// Optimal arbitrage over the fee trading set `{(Δ, Λ) : ψ(R + γΔ − Λ) ≥ ψ(R)}`.
///
/// Without fees this is [`solve_arbitrage_feeless`]. With fees the problem is
/// written over the fee-adjusted point `x = R + γΔ − Λ`: each coin costs `cᵢ`
/// per unit below `Rᵢ` (it is paid out) and `cᵢ/γ` per unit above (the input
/// needed is `(xᵢ − Rᵢ)/γ`). The resulting separable convex problem is solved
/// by the multiplier search in [`crate::frontier`], which selects the
/// input/output/untouched pattern of every coin at once.
pub fn solve_arbitrage(spec: &PoolSpec, c: &PriceVector) -> Result<ArbitrageResult> {
    if spec.gamma() == 1.0 {
        return solve_arbitrage_feeless(spec, c);
    }
    c.check_len(spec.n())?;
    let g = spec.gamma();
    let r = spec.reserves().as_slice();
    let costs: Vec<CoinCost> = r
        .iter()
        .zip(c.as_slice())
        .map(|(&ri, &ci)| CoinCost::Linear { kink: ri, below: ci, above: ci / g, floor: None })
        .collect();
    let sol = frontier::solve(spec.potential(), &costs, spec.level().value())?;
    finish(spec, c, &sol.x, sol.multiplier, SolveStatus::Numeric)
}

/// Turn an optimal fee-adjusted point into a trade and apply the no-trade rule.
fn finish(spec: &PoolSpec, c: &PriceVector, x: &[f64], lambda: f64, status: SolveStatus) -> Result<ArbitrageResult> {
    let g = spec.gamma();
    let r = spec.reserves().as_slice();
    let n = spec.n();
    let mut trade = Trade::zero(n);
    for i in 0..n {
        if x[i] > r[i] {
            trade.delta[i] = (x[i] - r[i]) / g;
        } else {
            trade.lambda[i] = r[i] - x[i];
        }
    }
    let p = profit(c, &trade);
    let max_move = (0..n)
        .map(|i| (trade.delta[i] + trade.lambda[i]) / r[i])
        .fold(0.0, f64::max);
    if !(p > 0.0) || max_move <= NO_TRADE_REL_MOVE {
        return Ok(ArbitrageResult {
            trade: Trade::zero(n),
            post_reserves: spec.reserves().clone(),
            profit: 0.0,
            dual_lambda: lambda,
            status: SolveStatus::NoTrade,
        });
    }
    if !spec.trade_feasible(&trade, DEFAULT_FEAS_TOL) {
        return Err(CfmmError::Numerical(format!(
            "solver produced an infeasible trade at reserves {r:?}, prices {:?}: x = {x:?}",
            c.as_slice()
        )));
    }
    let post = spec.apply_trade(&trade)?;
    Ok(ArbitrageResult { trade, post_reserves: post, profit: p, dual_lambda: lambda, status })
}
