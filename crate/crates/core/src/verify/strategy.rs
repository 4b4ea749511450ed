//! Random multi-step trading strategies and the path-deficiency checks run
//! on them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::arbitrage::{profit, solve_arbitrage, PriceVector};
use crate::error::{CfmmError, Result};
use crate::numeric::{brent, Bracket};
use crate::pool::{PoolSpec, Reserves, Trade, DEFAULT_FEAS_TOL};
use crate::value::reserve_value;
use crate::verify::report::Report;

/// Fraction of generated steps that are the zero trade.
const ZERO_STEP_PROB: f64 = 0.1;

/// A sequence of trades from `start`, each feasible at the reserves left by
/// the previous one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyTrace {
    pub start: Reserves,
    /// Each trade with the reserves it leaves behind.
    pub steps: Vec<(Trade, Reserves)>,
    /// Sum of step profits at the strategy's prices.
    pub cumulative_profit: f64,
}

impl StrategyTrace {
    pub fn end(&self) -> &Reserves {
        self.steps.last().map(|(_, r)| r).unwrap_or(&self.start)
    }

    pub fn nonzero_steps(&self) -> usize {
        self.steps.iter().filter(|(t, _)| !t.is_zero()).count()
    }
}

/// A random boundary trade at the pool's current reserves: a random set of
/// input coins each receives `U(0.01, 0.5)·Rᵢ`, and the other coins pay out
/// along a random positive direction until `ψ` is back at its level.
pub fn random_boundary_trade(spec: &PoolSpec, rng: &mut impl Rng) -> Result<Trade> {
    let n = spec.n();
    let r = spec.reserves().as_slice();
    let g = spec.gamma();
    let mut coins: Vec<usize> = (0..n).collect();
    coins.shuffle(rng);
    let n_in = rng.random_range(1..n);
    let mut trade = Trade::zero(n);
    let mut dir = vec![0.0; n];
    for (pos, &i) in coins.iter().enumerate() {
        if pos < n_in {
            trade.delta[i] = rng.random_range(0.01..0.5) * r[i];
        } else {
            dir[i] = rng.random_range(0.05..1.0) * r[i];
        }
    }
    let k = spec.level().value();
    let t_max = (0..n).filter(|i| dir[*i] > 0.0).map(|i| r[i] / dir[i]).fold(f64::INFINITY, f64::min);
    let point = |t: f64| -> Vec<f64> { (0..n).map(|i| r[i] + g * trade.delta[i] - t * dir[i]).collect() };
    // k − ψ(point(t)) is increasing in t
    let f = |t: f64| {
        let x = point(t);
        if x.iter().any(|v| *v <= 0.0) {
            return f64::MAX;
        }
        match spec.eval_psi(&Reserves::from_vec_unchecked(x)) {
            Ok(v) => k - v,
            Err(_) => f64::MAX,
        }
    };
    let hi = t_max * (1.0 - 1e-9);
    let br = Bracket { lo: 0.0, hi, f_lo: f(0.0), f_hi: f(hi) };
    if br.f_hi <= 0.0 {
        return Err(CfmmError::Numerical("random trade could not reach the frontier".into()));
    }
    let t = brent(f, br, 1e-14, 300)?;
    // step back inside so rounding cannot leave the trading set
    let t = t * (1.0 - 1e-12);
    for i in 0..n {
        trade.lambda[i] = t * dir[i];
    }
    Ok(trade)
}

/// Random strategy of `steps` trades; about one step in ten is the zero trade.
pub fn random_strategy(spec: &PoolSpec, c: &PriceVector, steps: usize, rng: &mut impl Rng) -> Result<StrategyTrace> {
    let start = spec.reserves().clone();
    let mut at = spec.clone();
    let mut out = Vec::with_capacity(steps);
    let mut cum = 0.0;
    for _ in 0..steps {
        let trade = if rng.random_bool(ZERO_STEP_PROB) {
            Trade::zero(spec.n())
        } else {
            random_boundary_trade(&at, rng)?
        };
        let next = at.apply_trade(&trade)?;
        cum += profit(c, &trade);
        at = at.with_reserves(next.clone())?;
        out.push((trade, next));
    }
    Ok(StrategyTrace { start, steps: out, cumulative_profit: cum })
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn run_parallel<F>(check: &str, num: usize, seed: u64, f: F) -> Report
where
    F: Fn(u64, &mut Report) + Sync,
{
    let mut out = Report::new(check);
    let parts: Vec<Report> = (0..num as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = Report::new(check);
            r.samples = 1;
            f(seed.wrapping_add(i), &mut r);
            r
        })
        .collect();
    for p in parts {
        out.merge(p);
    }
    out
}

/// Samples random multi-step strategies and checks that
///
/// * (a) no strategy earns more than the single-shot optimum (+1e-9),
/// * (b) points reachable from the final reserves are reachable from the
///   start,
/// * (c) with fees, strategies of two or more nonzero trades fall strictly
///   short of the optimum and strictly raise `ψ`,
/// * without fees, the final reserves lie on the starting level set and the
///   step profits add up to `cᵀ(R⁰ − Rᵐ)`.
///
/// On top of the random strategies, one probe executes the optimal trade and
/// then solves again at the new reserves. Any second trade with positive
/// profit breaks (c), and (a) as well when it earns more than 1e-9.
///
/// Strategy `i` uses seed `rng_seed + i` and has between 2 and `max_steps`
/// steps (1 when `max_steps` is 1).
pub fn check_path_deficiency(
    spec: &PoolSpec,
    c: &PriceVector,
    num_strategies: usize,
    max_steps: usize,
    rng_seed: u64,
) -> Result<Report> {
    c.check_len(spec.n())?;
    let best = solve_arbitrage(spec, c)?.profit;
    let r0 = spec.reserves().clone();
    let wealth = c.dot(r0.as_slice());
    let k0 = spec.level().value();
    let strict_floor = 1e-12 * wealth;
    let report = run_parallel("path_deficiency", num_strategies, rng_seed, |seed, rep| {
        let mut rng = seeded(seed);
        let steps = if max_steps <= 1 { max_steps } else { rng.random_range(2..=max_steps) };
        let trace = match random_strategy(spec, c, steps, &mut rng) {
            Ok(t) => t,
            Err(e) => {
                rep.fail(seed, json!({"steps": steps}), json!(e.to_string()), json!("strategy generation"));
                return;
            }
        };
        let end = trace.end().clone();
        let inputs = || json!({"start": r0, "prices": c, "steps": trace.steps.iter().map(|(t, _)| t).collect::<Vec<_>>()});
        let cum = trace.cumulative_profit;
        rep.record_max("max_excess_over_optimum", cum - best);

        // (a)
        if cum > best + 1e-9 {
            rep.fail(seed, inputs(), json!({"cumulative_profit": cum}), json!({"optimum_plus_tol": best + 1e-9}));
        }
        let direct = c.dot(r0.as_slice()) - c.dot(end.as_slice());
        if (direct - cum).abs() > 1e-9 * wealth.max(1.0) {
            rep.fail(seed, inputs(), json!({"sum_of_step_profits": cum}), json!({"c_dot_reserve_change": direct}));
        }
        // (b)
        let Ok(at_end) = spec.with_reserves(end.clone()) else {
            rep.fail(seed, inputs(), json!("final reserves invalid"), json!(null));
            return;
        };
        if !spec.in_reachable_set(&r0, &end, DEFAULT_FEAS_TOL) {
            rep.fail(seed, inputs(), json!({"end": end}), json!("end reachable from start"));
        }
        for _ in 0..4 {
            let Ok(t) = random_boundary_trade(&at_end, &mut rng) else { continue };
            let Ok(p) = at_end.apply_trade(&t) else { continue };
            if !spec.in_reachable_set(&r0, &p, DEFAULT_FEAS_TOL) {
                rep.fail(seed, inputs(), json!({"point_from_end": p}), json!("in reachable set of start"));
            }
        }
        // (c) and the fee-less counterpart
        let psi_end = at_end.level().value();
        if spec.gamma() < 1.0 {
            if trace.nonzero_steps() >= 2 {
                rep.record_min("min_shortfall", best - cum);
                if !(cum < best - strict_floor) || !(psi_end > k0) {
                    rep.fail(
                        seed,
                        inputs(),
                        json!({"cumulative_profit": cum, "psi_end": psi_end}),
                        json!({"strictly_below": best - strict_floor, "psi_start": k0}),
                    );
                }
            }
        } else {
            let drift = (psi_end - k0).abs() / spec.potential().scale(r0.as_slice());
            rep.record_max("level_drift", drift);
            if drift > 1e-9 {
                rep.fail(seed, inputs(), json!({"psi_end": psi_end}), json!({"psi_start": k0}));
            }
        }
    });
    let mut report = report;
    rearbitrage_probe(spec, c, &mut report)?;
    Ok(report)
}

fn rearbitrage_probe(spec: &PoolSpec, c: &PriceVector, rep: &mut Report) -> Result<()> {
    let first = solve_arbitrage(spec, c)?;
    if first.trade.is_zero() {
        return Ok(());
    }
    let second = solve_arbitrage(&spec.with_reserves(first.post_reserves.clone())?, c)?;
    rep.record_max("rearbitrage_profit", second.profit);
    let strict_broken = spec.gamma() < 1.0 && !second.trade.is_zero();
    if second.profit > 1e-9 || strict_broken {
        rep.fail(
            u64::MAX,
            json!({"start": spec.reserves(), "prices": c, "first": first.trade, "second": second.trade}),
            json!({"two_step_profit": first.profit + second.profit}),
            json!({"single_shot_profit": first.profit}),
        );
    }
    Ok(())
}

/// For strictly increasing ψ, `r1` is in the dominated interior of the
/// fee-less reachable set of `r0` iff it lies strictly above the level set.
pub fn in_dominated_interior(spec: &PoolSpec, r0: &Reserves, r1: &Reserves) -> Result<bool> {
    let k0 = spec.eval_psi(r0)?;
    let k1 = spec.eval_psi(r1)?;
    let tol = DEFAULT_FEAS_TOL * spec.potential().scale(r0.as_slice());
    if k1 < k0 - tol {
        return Err(CfmmError::InvalidInput(format!(
            "{:?} is not reachable from {:?} (ψ = {k1} < {k0})",
            r1.as_slice(),
            r0.as_slice()
        )));
    }
    Ok(k1 > k0 + tol)
}

/// Along random strategies, `1ᵀR` never drops below the cheapest point of the
/// starting reachable set, `inf{1ᵀR′ : ψ(R′) ≥ ψ(R⁰)}`.
pub fn check_reserve_floor(spec: &PoolSpec, num_strategies: usize, max_steps: usize, rng_seed: u64) -> Result<Report> {
    let ones = PriceVector::new(vec![1.0; spec.n()])?;
    let floor = reserve_value(spec, &ones)?.value;
    Ok(run_parallel("reserve_floor", num_strategies, rng_seed, |seed, rep| {
        let mut rng = seeded(seed);
        let steps = rng.random_range(1..=max_steps.max(1));
        match random_strategy(spec, &ones, steps, &mut rng) {
            Ok(trace) => {
                for (_, r) in &trace.steps {
                    let total: f64 = r.as_slice().iter().sum();
                    rep.record_min("min_slack", total - floor);
                    if total < floor * (1.0 - 1e-9) {
                        rep.fail(seed, json!({"reserves": r}), json!(total), json!(floor));
                    }
                }
            }
            Err(e) => rep.fail(seed, json!({"steps": steps}), json!(e.to_string()), json!(null)),
        }
    }))
}

/// Compares [`PoolSpec::in_reachable_set`], which only tries the minimal
/// decomposition `Δ = (r1 − r0)₊`, `Λ = (r0 − r1)₊`, against a grid search
/// over every decomposition `Δ = (r1 − r0)₊ + s`, `Λ = (r0 − r1)₊ + s`,
/// `s ≥ 0`. Two-coin pools only; pairs within 1e-7 of the boundary are
/// skipped.
pub fn check_reachable_decomposition(spec: &PoolSpec, num_samples: usize, rng_seed: u64) -> Result<Report> {
    if spec.n() != 2 {
        return Err(CfmmError::Unsupported("decomposition search is two-dimensional".into()));
    }
    let g = spec.gamma();
    Ok(run_parallel("reachable_decomposition", num_samples, rng_seed, |seed, rep| {
        let mut rng = seeded(seed);
        let r0: Vec<f64> = (0..2).map(|_| rng.random_range(0.5..5.0)).collect();
        let r1: Vec<f64> = r0.iter().map(|v| v * rng.random_range(-0.7f64..0.7).exp()).collect();
        let (Ok(r0), Ok(r1)) = (Reserves::new(r0), Reserves::new(r1)) else { return };
        let Ok(at) = spec.with_reserves(r0.clone()) else { return };
        let k = at.level().value();
        let scale = at.potential().scale(r0.as_slice());
        let psi_at = |s: [f64; 2]| -> f64 {
            let x: Vec<f64> = (0..2)
                .map(|i| {
                    let (a, b) = (r0[i], r1[i]);
                    let d = (b - a).max(0.0) + s[i];
                    let l = (a - b).max(0.0) + s[i];
                    a + g * d - l
                })
                .collect();
            if x.iter().any(|v| *v <= 0.0) {
                return f64::NEG_INFINITY;
            }
            at.potential().value(&x)
        };
        let margin = (psi_at([0.0, 0.0]) - k) / scale;
        if margin.abs() < 1e-7 {
            return;
        }
        let s_max = r0.as_slice().iter().chain(r1.as_slice()).cloned().fold(0.0, f64::max);
        let mut found = false;
        'search: for a in 0..=20 {
            for b in 0..=20 {
                let s = [s_max * a as f64 / 20.0, s_max * b as f64 / 20.0];
                if psi_at(s) >= k - DEFAULT_FEAS_TOL * scale {
                    found = true;
                    break 'search;
                }
            }
        }
        let minimal = at.in_reachable_set(&r0, &r1, DEFAULT_FEAS_TOL);
        if minimal != found {
            rep.fail(seed, json!({"r0": r0, "r1": r1}), json!({"minimal": minimal}), json!({"search": found}));
        }
    }))
}
