//! Minimization of a separable convex cost over the superlevel set of ψ.
//!
//! Several problems share one shape:
//!
//! ```text
//! minimize    Σᵢ hᵢ(xᵢ)
//! subject to  ψ(x) ≥ k
//! ```
//!
//! where `x` is the fee-adjusted post-trade point and each `hᵢ` is a convex
//! cost of moving coin `i`. Optimal arbitrage with fees, the cost of buying a
//! given output and the projection onto the trading set all fit.
//!
//! Both potentials are concave, so for a fixed multiplier the Lagrangian
//! `Σ hᵢ(xᵢ) − μψ(x)` is convex and its minimizer is found coin by coin: each
//! coin balances its cost slope against a marginal benefit of the form
//! `offset + scale/x`. For the geometric mean this uses `log ψ`, which is
//! additive across coins. For Curve the `1/∏x` term couples the coins through
//! the product `P = ∏x`, which is resolved by a monotone fixed point. The
//! multiplier itself is then found by scalar root finding on `ψ(x(μ)) = k`,
//! which is monotone in `μ`.

use std::cell::RefCell;

use crate::error::{CfmmError, Result};
use crate::numeric::{bracket_increasing, brent, saturate};
use crate::pool::Potential;

/// Marginal benefit `offset + scale/x` of holding `x` of one coin.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Marginal {
    pub offset: f64,
    pub scale: f64,
}

impl Marginal {
    fn at(self, x: f64) -> f64 {
        self.offset + self.scale / x
    }

    /// The holding at which the marginal benefit equals `slope`; `None` when
    /// it stays above `slope` for every holding.
    fn inverse(self, slope: f64) -> Option<f64> {
        (slope > self.offset).then(|| self.scale / (slope - self.offset))
    }
}

/// Convex cost of moving one coin's fee-adjusted holding to `x`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CoinCost {
    /// Slope `below` on `[floor, kink]`, slope `above` on `[kink, ∞)` and
    /// infinite below `floor`. The cost is zero at the kink.
    Linear { kink: f64, below: f64, above: f64, floor: Option<f64> },
    /// Half the squared distance from the trade pair `(input, output)` to the
    /// nearest nonnegative pair `(Δ, Λ)` with `γΔ − Λ = x − base`.
    Projection { base: f64, input: f64, output: f64, gamma: f64 },
}

impl CoinCost {
    /// Linear cost with the same slope on both sides of the kink.
    #[cfg(test)]
    pub(crate) fn linear(slope: f64, kink: f64) -> Self {
        CoinCost::Linear { kink, below: slope, above: slope, floor: None }
    }

    pub(crate) fn slope_cap(&self) -> f64 {
        match self {
            CoinCost::Linear { above, .. } => *above,
            CoinCost::Projection { .. } => f64::INFINITY,
        }
    }

    /// The holding minimizing `hᵢ(x) − ∫ marginal`, i.e. the point where the
    /// marginal benefit enters the subdifferential of the cost. `None` when
    /// the benefit exceeds every cost slope (unbounded response).
    fn respond(&self, m: Marginal) -> Result<Option<f64>> {
        match *self {
            CoinCost::Linear { kink, below, above, floor } => {
                let at_kink = m.at(kink);
                if at_kink > above {
                    Ok(m.inverse(above))
                } else if at_kink >= below {
                    Ok(Some(kink))
                } else {
                    let x = m.inverse(below).unwrap_or(kink);
                    Ok(Some(match floor {
                        Some(f) => x.max(f),
                        None => x,
                    }))
                }
            }
            CoinCost::Projection { base, input, output, gamma } => {
                // q'(x − base) − marginal(x) is increasing in x; solve in log x.
                let h = |u: f64| {
                    let x = u.exp();
                    saturate(projection_slope(x - base, input, output, gamma) - m.at(x))
                };
                let u0 = base.max(1e-12).ln();
                let br = bracket_increasing(h, u0, 1.0, 200)?;
                let u = brent(h, br, 1e-15, 300)?;
                Ok(Some(u.exp()))
            }
        }
    }
}

/// Where the nearest pair sits: both entries free, only `Δ` positive, or only
/// `Λ` positive.
enum PairCase {
    Free(f64),
    InputOnly(f64),
    OutputOnly,
}

fn pair_case(s: f64, a: f64, b: f64, gamma: f64) -> PairCase {
    let d = (a + gamma * (s + b)) / (1.0 + gamma * gamma);
    let lower = (s / gamma).max(0.0);
    if d > lower {
        PairCase::Free(d)
    } else if s > 0.0 {
        PairCase::InputOnly(lower)
    } else {
        PairCase::OutputOnly
    }
}

/// Nearest `(Δ, Λ) ≥ 0` to `(a, b)` with `γΔ − Λ = s`.
pub(crate) fn nearest_pair(s: f64, a: f64, b: f64, gamma: f64) -> (f64, f64) {
    match pair_case(s, a, b, gamma) {
        PairCase::Free(d) => (d, (gamma * d - s).max(0.0)),
        PairCase::InputOnly(d) => (d, 0.0),
        PairCase::OutputOnly => (0.0, -s),
    }
}

/// Derivative of the half squared distance with respect to the net move `s`.
/// The branches are chosen explicitly so that rounding in `γΔ − s` cannot
/// flip between them.
fn projection_slope(s: f64, a: f64, b: f64, gamma: f64) -> f64 {
    match pair_case(s, a, b, gamma) {
        PairCase::Free(d) => b - (gamma * d - s),
        PairCase::InputOnly(d) => (d - a) / gamma,
        PairCase::OutputOnly => b + s,
    }
}

/// Optimal fee-adjusted point and the multiplier of `ψ(x) ≥ k`.
#[derive(Debug, Clone)]
pub(crate) struct FrontierPoint {
    pub x: Vec<f64>,
    /// `μ ≥ 0` with `μ∇ψ(x) ∈ ∂h(x)`.
    pub multiplier: f64,
}

/// Collects the first error raised inside a root-finder closure, which must
/// return a plain `f64`.
struct ErrSlot(RefCell<Option<CfmmError>>);

impl ErrSlot {
    fn new() -> Self {
        ErrSlot(RefCell::new(None))
    }

    fn stash(&self, e: CfmmError) -> f64 {
        self.0.borrow_mut().get_or_insert(e);
        f64::NAN
    }

    fn take_or(&self, e: CfmmError) -> CfmmError {
        self.0.borrow_mut().take().unwrap_or(e)
    }
}

pub(crate) fn solve(potential: &Potential, costs: &[CoinCost], k: f64) -> Result<FrontierPoint> {
    match potential {
        Potential::Mean { weights } => solve_mean(weights, costs, k),
        Potential::Curve { alpha, beta } => solve_curve(*alpha, *beta, costs, k),
    }
}

fn mean_point(weights: &[f64], costs: &[CoinCost], m: f64) -> Result<Vec<f64>> {
    costs
        .iter()
        .zip(weights)
        .map(|(c, w)| {
            c.respond(Marginal { offset: 0.0, scale: m * w })?
                .ok_or_else(|| CfmmError::Numerical("unbounded coin response".into()))
        })
        .collect()
}

fn solve_mean(weights: &[f64], costs: &[CoinCost], k: f64) -> Result<FrontierPoint> {
    if !(k > 0.0) {
        return Err(CfmmError::Domain(format!("geometric-mean level must be positive, got {k}")));
    }
    let log_k = k.ln();
    let slot = ErrSlot::new();
    // log ψ(x(e^t)) − log k, nondecreasing in t
    let f = |t: f64| match mean_point(weights, costs, t.exp()) {
        Ok(x) => saturate(x.iter().zip(weights).map(|(x, w)| w * x.ln()).sum::<f64>() - log_k),
        Err(e) => slot.stash(e),
    };
    let br = bracket_increasing(f, 0.0, 1.0, 200).map_err(|e| slot.take_or(e))?;
    let t = brent(f, br, 1e-15, 400).map_err(|e| slot.take_or(e))?;
    let m = t.exp();
    let x = mean_point(weights, costs, m)?;
    let psi: f64 = x.iter().zip(weights).map(|(x, w)| x.powf(*w)).product();
    Ok(FrontierPoint { x, multiplier: m / psi })
}

/// Coin responses for multiplier `mu` with the product fixed point resolved.
/// `None` when some coin's response is unbounded.
fn curve_point(alpha: f64, beta: f64, costs: &[CoinCost], mu: f64) -> Result<Option<Vec<f64>>> {
    let respond_all = |log_p: f64| -> Result<Option<Vec<f64>>> {
        let m = Marginal { offset: mu * alpha, scale: mu * beta * (-log_p).exp() };
        let mut xs = Vec::with_capacity(costs.len());
        for c in costs {
            match c.respond(m)? {
                Some(x) => xs.push(x),
                None => return Ok(None),
            }
        }
        Ok(Some(xs))
    };
    let slot = ErrSlot::new();
    let unbounded = RefCell::new(false);
    // log P − Σ log xᵢ(P), increasing in log P
    let g = |log_p: f64| match respond_all(log_p) {
        Ok(Some(xs)) => saturate(log_p - xs.iter().map(|x| x.ln()).sum::<f64>()),
        Ok(None) => {
            *unbounded.borrow_mut() = true;
            f64::NAN
        }
        Err(e) => slot.stash(e),
    };
    let u0: f64 = costs
        .iter()
        .map(|c| match c {
            CoinCost::Linear { kink, .. } => kink.max(1e-12).ln(),
            CoinCost::Projection { base, .. } => base.max(1e-12).ln(),
        })
        .sum();
    let br = bracket_increasing(g, u0, 1.0, 200);
    if *unbounded.borrow() {
        return Ok(None);
    }
    let br = br.map_err(|e| slot.take_or(e))?;
    let log_p = brent(g, br, 1e-15, 400).map_err(|e| slot.take_or(e))?;
    if *unbounded.borrow() {
        return Ok(None);
    }
    respond_all(log_p)
}

fn solve_curve(alpha: f64, beta: f64, costs: &[CoinCost], k: f64) -> Result<FrontierPoint> {
    let potential = Potential::Curve { alpha, beta };
    let cap = if alpha > 0.0 {
        costs.iter().map(|c| c.slope_cap()).fold(f64::INFINITY, f64::min) / alpha
    } else {
        f64::INFINITY
    };
    // multiplier as a function of an unconstrained variable
    let mu_of = |v: f64| {
        if cap.is_finite() {
            cap / (1.0 + (-v).exp())
        } else {
            v.exp()
        }
    };
    let slot = ErrSlot::new();
    let h = |v: f64| {
        let mu = mu_of(v);
        if mu <= 0.0 {
            return -f64::MAX;
        }
        match curve_point(alpha, beta, costs, mu) {
            Ok(Some(x)) => saturate(potential.value(&x) - k),
            // ψ grows without bound as μ approaches the cap
            Ok(None) => f64::MAX,
            Err(e) => slot.stash(e),
        }
    };
    let br = bracket_increasing(h, 0.0, 1.0, 200).map_err(|e| slot.take_or(e))?;
    let v = brent(h, br, 1e-14, 400).map_err(|e| slot.take_or(e))?;
    let mut mu = mu_of(v);
    let mut x = curve_point(alpha, beta, costs, mu)?;
    // the root can sit at the last representable point before the cap
    let mut back = v;
    for _ in 0..64 {
        if x.is_some() {
            break;
        }
        back -= 1e-12 * back.abs().max(1.0);
        mu = mu_of(back);
        x = curve_point(alpha, beta, costs, mu)?;
    }
    let x = x.ok_or_else(|| CfmmError::Numerical(format!("Curve multiplier {mu} at the slope cap {cap}")))?;
    Ok(FrontierPoint { x, multiplier: mu })
}
