//! Pool specifications and the trading-function primitives: the potential ψ,
//! the fee-adjusted trading function φ, feasibility, trade application and
//! reachable-set membership.
//!
//! Every pool is described by a potential ψ over strictly positive reserves and
//! a fee retention factor γ. A trade `(Δ, Λ)` is feasible at reserves `R` iff
//! `ψ(R + γΔ − Λ) ≥ ψ(R)`. Constant product pools are constant mean pools with
//! uniform weights.

use serde::{Deserialize, Serialize};

use crate::error::{CfmmError, Result};

/// Smallest reserve entry accepted as "strictly positive".
pub const MIN_RESERVE: f64 = 1e-12;

/// Default feasibility tolerance, relative to the magnitude of ψ(R).
pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Product,
    Mean,
    Curve,
}

impl PoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::Product => "product",
            PoolKind::Mean => "mean",
            PoolKind::Curve => "curve",
        }
    }
}

/// Token amounts held by a pool, one entry per coin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reserves(Vec<f64>);

impl Reserves {
    /// Finite, nonnegative amounts. Strict positivity is checked where ψ is
    /// evaluated.
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(CfmmError::InvalidInput(format!(
                "reserve {i} must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Reserves(r))
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

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&v| v >= MIN_RESERVE)
    }

    pub(crate) fn from_vec_unchecked(r: Vec<f64>) -> Self {
        Reserves(r)
    }
}

impl std::ops::Index<usize> for Reserves {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An input basket `delta` (paid into the pool) and an output basket `lambda`
/// (paid out), both nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub delta: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Trade {
    pub fn new(delta: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if delta.len() != lambda.len() {
            return Err(CfmmError::InvalidInput(format!(
                "trade baskets differ in length ({} vs {})",
                delta.len(),
                lambda.len()
            )));
        }
        for (name, v) in [("delta", &delta), ("lambda", &lambda)] {
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
                return Err(CfmmError::InvalidInput(format!(
                    "{name}[{i}] must be finite and nonnegative, got {x}"
                )));
            }
        }
        Ok(Trade { delta, lambda })
    }

    pub fn zero(n: usize) -> Self {
        Trade { delta: vec![0.0; n], lambda: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.delta.iter().chain(&self.lambda).all(|&v| v == 0.0)
    }

    pub fn has_input(&self) -> bool {
        self.delta.iter().any(|&v| v > 0.0)
    }

    /// The trade with the smallest baskets that moves reserves by `net`:
    /// `Δ = net₊`, `Λ = (−net)₊`.
    pub fn from_net(net: &[f64]) -> Self {
        Trade {
            delta: net.iter().map(|&d| d.max(0.0)).collect(),
            lambda: net.iter().map(|&d| (-d).max(0.0)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Trade {
        Trade {
            delta: self.delta.iter().map(|v| v * s).collect(),
            lambda: self.lambda.iter().map(|v| v * s).collect(),
        }
    }
}

/// The value ψ(R⁰) that defines a pool's frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InvariantLevel(pub f64);

impl InvariantLevel {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// The potential ψ shared by a family of pools.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Potential {
    /// Weighted geometric mean `∏ rᵢ^{wᵢ}`.
    Mean { weights: Vec<f64> },
    /// `α·Σrᵢ − β/∏rᵢ`.
    Curve { alpha: f64, beta: f64 },
}

impl Potential {
    pub(crate) fn value(&self, r: &[f64]) -> f64 {
        match self {
            Potential::Mean { weights } => r.iter().zip(weights).map(|(x, w)| x.powf(*w)).product(),
            Potential::Curve { alpha, beta } => {
                let sum: f64 = r.iter().sum();
                let prod: f64 = r.iter().product();
                alpha * sum - beta / prod
            }
        }
    }

    /// Magnitude used to turn relative tolerances into absolute ones.
    pub(crate) fn scale(&self, r: &[f64]) -> f64 {
        match self {
            Potential::Mean { .. } => self.value(r).abs().max(f64::MIN_POSITIVE),
            Potential::Curve { alpha, beta } => {
                let sum: f64 = r.iter().sum();
                let prod: f64 = r.iter().product();
                (alpha * sum + beta / prod).max(f64::MIN_POSITIVE)
            }
        }
    }

    pub(crate) fn gradient(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Potential::Mean { weights } => {
                let psi = self.value(r);
                r.iter().zip(weights).map(|(x, w)| w / x * psi).collect()
            }
            Potential::Curve { alpha, beta } => {
                let prod: f64 = r.iter().product();
                r.iter().map(|x| alpha + beta / (x * prod)).collect()
            }
        }
    }
}

/// A constant function market maker: kind, parameters and current reserves.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSpec {
    kind: PoolKind,
    reserves: Reserves,
    gamma: f64,
    potential: Potential,
}

impl PoolSpec {
    /// Constant product pool over `reserves.len()` coins.
    pub fn product(reserves: Vec<f64>, gamma: f64) -> Result<Self> {
        let n = reserves.len();
        let weights = vec![1.0 / n.max(1) as f64; n];
        Self::build(PoolKind::Product, reserves, gamma, Potential::Mean { weights })
    }

    /// Constant mean pool with strictly positive simplex weights.
    pub fn mean(reserves: Vec<f64>, weights: Vec<f64>, gamma: f64) -> Result<Self> {
        Self::build(PoolKind::Mean, reserves, gamma, Potential::Mean { weights })
    }

    /// Curve pool, `ψ(R) = α·Σ Rᵢ − β/∏ Rᵢ` with `α ≥ 0`, `β > 0`.
    pub fn curve(reserves: Vec<f64>, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::build(PoolKind::Curve, reserves, gamma, Potential::Curve { alpha, beta })
    }

    fn build(kind: PoolKind, reserves: Vec<f64>, gamma: f64, potential: Potential) -> Result<Self> {
        let problems = validate_parts(kind, &reserves, gamma, &potential);
        if !problems.is_empty() {
            return Err(CfmmError::Config(problems));
        }
        Ok(PoolSpec { kind, reserves: Reserves(reserves), gamma, potential })
    }

    pub fn kind(&self) -> PoolKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.reserves.len()
    }

    pub fn reserves(&self) -> &Reserves {
        &self.reserves
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Weights of a mean or product pool.
    pub fn weights(&self) -> Option<&[f64]> {
        match &self.potential {
            Potential::Mean { weights } => Some(weights),
            Potential::Curve { .. } => None,
        }
    }

    /// `(α, β)` of a Curve pool.
    pub fn curve_params(&self) -> Option<(f64, f64)> {
        match self.potential {
            Potential::Curve { alpha, beta } => Some((alpha, beta)),
            Potential::Mean { .. } => None,
        }
    }

    pub(crate) fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Same pool parameters at different reserves.
    pub fn with_reserves(&self, reserves: Reserves) -> Result<Self> {
        if reserves.len() != self.n() {
            return Err(CfmmError::InvalidInput(format!(
                "expected {} reserves, got {}",
                self.n(),
                reserves.len()
            )));
        }
        if !reserves.is_strictly_positive() {
            return Err(CfmmError::Domain("reserves must be strictly positive".into()));
        }
        Ok(PoolSpec { reserves, ..self.clone() })
    }

    /// Same pool with the fee removed (γ = 1).
    pub fn without_fee(&self) -> Self {
        PoolSpec { gamma: 1.0, ..self.clone() }
    }

    /// The current frontier level `k = ψ(R)`.
    pub fn level(&self) -> InvariantLevel {
        InvariantLevel(self.potential.value(self.reserves.as_slice()))
    }

    fn check_domain(&self, r: &[f64], what: &str) -> Result<()> {
        if r.len() != self.n() {
            return Err(CfmmError::InvalidInput(format!(
                "{what}: expected {} entries, got {}",
                self.n(),
                r.len()
            )));
        }
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !(**v >= MIN_RESERVE) || !v.is_finite()) {
            return Err(CfmmError::Domain(format!(
                "{what}: entry {i} is {v}, must be at least {MIN_RESERVE}"
            )));
        }
        Ok(())
    }

    /// ψ(r).
    pub fn eval_psi(&self, r: &Reserves) -> Result<f64> {
        self.check_domain(r.as_slice(), "eval_psi")?;
        Ok(self.potential.value(r.as_slice()))
    }

    /// ∇ψ(r); every entry is strictly positive.
    pub fn grad_psi(&self, r: &Reserves) -> Result<Vec<f64>> {
        self.check_domain(r.as_slice(), "grad_psi")?;
        Ok(self.potential.gradient(r.as_slice()))
    }

    /// The fee-adjusted post-trade point `R + γΔ − Λ`, unchecked.
    pub fn fee_adjusted_point(&self, trade: &Trade) -> Vec<f64> {
        self.reserves
            .as_slice()
            .iter()
            .zip(&trade.delta)
            .zip(&trade.lambda)
            .map(|((r, d), l)| r + self.gamma * d - l)
            .collect()
    }

    /// φ(R, Δ, Λ) = ψ(R + γΔ − Λ).
    pub fn eval_phi(&self, trade: &Trade) -> Result<f64> {
        self.check_trade_len(trade)?;
        let x = self.fee_adjusted_point(trade);
        self.check_domain(&x, "eval_phi (trade drains a coin)")?;
        Ok(self.potential.value(&x))
    }

    fn check_trade_len(&self, trade: &Trade) -> Result<()> {
        if trade.delta.len() != self.n() || trade.lambda.len() != self.n() {
            return Err(CfmmError::InvalidInput(format!(
                "trade has {}/{} entries, pool has {} coins",
                trade.delta.len(),
                trade.lambda.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// `true` iff `ψ(R + γΔ − Λ) ≥ ψ(R) − tol·scale` with the post-trade point
    /// strictly positive. `tol` is relative to the magnitude of ψ at `R`.
    pub fn trade_feasible(&self, trade: &Trade, tol: f64) -> bool {
        if self.check_trade_len(trade).is_err() {
            return false;
        }
        if trade.delta.iter().chain(&trade.lambda).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return false;
        }
        let x = self.fee_adjusted_point(trade);
        self.level_reached(&x, self.reserves.as_slice(), tol)
    }

    /// `ψ(x) ≥ ψ(base) − tol·scale(base)` with `x` in the domain.
    fn level_reached(&self, x: &[f64], base: &[f64], tol: f64) -> bool {
        if x.iter().any(|v| !(*v >= MIN_RESERVE)) {
            return false;
        }
        let k = self.potential.value(base);
        self.potential.value(x) >= k - tol * self.potential.scale(base)
    }

    /// Reserves after executing a feasible trade: `R + Δ − Λ`. The full input
    /// enters the reserves; γ only matters for feasibility.
    pub fn apply_trade(&self, trade: &Trade) -> Result<Reserves> {
        self.check_trade_len(trade)?;
        if !self.trade_feasible(trade, DEFAULT_FEAS_TOL) {
            return Err(CfmmError::Rejected(format!(
                "trade {:?} / {:?} is not feasible at reserves {:?}",
                trade.delta,
                trade.lambda,
                self.reserves.as_slice()
            )));
        }
        let next = self
            .reserves
            .as_slice()
            .iter()
            .zip(&trade.delta)
            .zip(&trade.lambda)
            .map(|((r, d), l)| r + d - l)
            .collect();
        Ok(Reserves(next))
    }

    /// Whether `r1` can be reached from `r0` by one feasible trade of this pool.
    ///
    /// Only the minimal decomposition `Δ = (r1 − r0)₊`, `Λ = (r0 − r1)₊` needs
    /// to be checked: adding `t` to both `Δᵢ` and `Λᵢ` moves the ψ argument by
    /// `(γ − 1)t ≤ 0`.
    pub fn in_reachable_set(&self, r0: &Reserves, r1: &Reserves, tol: f64) -> bool {
        if r0.len() != self.n() || r1.len() != self.n() {
            return false;
        }
        if !r0.is_strictly_positive() || !r1.is_strictly_positive() {
            return false;
        }
        let x: Vec<f64> = r0
            .as_slice()
            .iter()
            .zip(r1.as_slice())
            .map(|(a, b)| if b > a { a + self.gamma * (b - a) } else { *b })
            .collect();
        self.level_reached(&x, r0.as_slice(), tol)
    }
}

fn validate_parts(kind: PoolKind, reserves: &[f64], gamma: f64, potential: &Potential) -> Vec<String> {
    let mut problems = Vec::new();
    if reserves.len() < 2 {
        problems.push(format!("reserves: need at least 2 coins, got {}", reserves.len()));
    }
    for (i, r) in reserves.iter().enumerate() {
        if !r.is_finite() || *r < MIN_RESERVE {
            problems.push(format!("reserves[{i}]: must be a finite number ≥ {MIN_RESERVE}, got {r}"));
        }
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        problems.push(format!("gamma: must lie in (0, 1], got {gamma}"));
    }
    match potential {
        Potential::Mean { weights } => {
            if kind == PoolKind::Mean && weights.len() != reserves.len() {
                problems.push(format!(
                    "weights: expected {} entries, got {}",
                    reserves.len(),
                    weights.len()
                ));
            }
            for (i, w) in weights.iter().enumerate() {
                if !w.is_finite() || *w <= 0.0 {
                    problems.push(format!("weights[{i}]: must be strictly positive, got {w}"));
                }
            }
            let sum: f64 = weights.iter().sum();
            if !weights.is_empty() && (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                problems.push(format!("weights: must sum to 1 within {WEIGHT_SUM_TOL}, got {sum}"));
            }
        }
        Potential::Curve { alpha, beta } => {
            if !alpha.is_finite() || *alpha < 0.0 {
                problems.push(format!("alpha: must be finite and ≥ 0, got {alpha}"));
            }
            if !beta.is_finite() || *beta <= 0.0 {
                problems.push(format!("beta: must be finite and > 0, got {beta}"));
            }
        }
    }
    problems
}
