//! Arbitrageur-driven simulation of a pool against a moving reference market.
//!
//! Each step moves the reference prices, lets a single arbitrageur execute
//! the optimal trade if it clears the profit threshold, and records the
//! pool's state. The numéraire (coin 0) is pinned at price 1.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::arbitrage::{solve_arbitrage, PriceVector};
use crate::error::{CfmmError, Result};
use crate::pool::{PoolSpec, Reserves, Trade};
use crate::pricing::reported_price;
use crate::value::reserve_value;

#[derive(Debug, Clone, PartialEq)]
pub enum PriceModel {
    /// Per-step drift `mu` and volatility `sigma`; prices follow
    /// `c ← c·exp((mu − sigma²/2)·dt + sigma·√dt·z)` with `z ~ N(0, 1)` drawn
    /// from ChaCha8 seeded with the run's seed.
    GeometricBrownian { mu: f64, sigma: f64 },
    /// Recorded price rows, one per step, used as given.
    Replay(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub pool: PoolSpec,
    pub price_model: PriceModel,
    pub steps: usize,
    pub dt: f64,
    pub seed: u64,
    /// Trades execute only when their profit exceeds this (0 executes every
    /// strictly profitable trade). A positive value models a per-trade cost.
    pub profit_threshold: f64,
    /// Reference prices before the first step; all ones when `None`.
    pub initial_prices: Option<Vec<f64>>,
}

impl SimConfig {
    pub fn gbm(pool: PoolSpec, mu: f64, sigma: f64, steps: usize, seed: u64) -> Self {
        SimConfig {
            pool,
            price_model: PriceModel::GeometricBrownian { mu, sigma },
            steps,
            dt: 1.0,
            seed,
            profit_threshold: 0.0,
            initial_prices: None,
        }
    }

    pub fn replay(pool: PoolSpec, rows: Vec<Vec<f64>>) -> Self {
        SimConfig {
            pool,
            steps: rows.len(),
            price_model: PriceModel::Replay(rows),
            dt: 1.0,
            seed: 0,
            profit_threshold: 0.0,
            initial_prices: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pool.n();
        let mut problems = Vec::new();
        if self.steps < 1 {
            problems.push("steps: must be at least 1".to_string());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            problems.push(format!("dt: must be positive, got {}", self.dt));
        }
        if !(self.profit_threshold >= 0.0 && self.profit_threshold.is_finite()) {
            problems.push(format!("threshold: must be >= 0, got {}", self.profit_threshold));
        }
        match &self.price_model {
            PriceModel::GeometricBrownian { mu, sigma } => {
                if !mu.is_finite() {
                    problems.push(format!("mu: must be finite, got {mu}"));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    problems.push(format!("sigma: must be >= 0, got {sigma}"));
                }
            }
            PriceModel::Replay(rows) => {
                if rows.len() < self.steps {
                    problems.push(format!("replay: {} rows for {} steps", rows.len(), self.steps));
                }
                for (t, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        problems.push(format!("replay row {}: {} prices for {n} coins", t + 1, row.len()));
                    } else if row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        problems.push(format!("replay row {}: prices must be positive", t + 1));
                    }
                }
            }
        }
        if let Some(c0) = &self.initial_prices {
            if c0.len() != n || c0.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                problems.push(format!("initial prices: need {n} positive values"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CfmmError::Config(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub step: usize,
    pub prices: Vec<f64>,
    pub trade: Trade,
    /// Reserves after the step's trade (unchanged when no trade executed).
    pub reserves: Vec<f64>,
    /// Reported price at the post-trade reserves, numéraire coin 0.
    pub reported: Vec<f64>,
    /// Reserve value at this step's prices before the trade.
    pub value_before: f64,
    /// Reserve value at this step's prices after the trade.
    pub reserve_value: f64,
    /// `cᵀR⁰`: value of holding the initial reserves instead.
    pub hold_value: f64,
    pub cum_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub n: usize,
    pub rows: Vec<SimRow>,
}

pub fn simulate(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let n = config.pool.n();
    let r0 = config.pool.reserves().clone();
    let mut pool = config.pool.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut c = config.initial_prices.clone().unwrap_or_else(|| vec![1.0; n]);
    let mut cum = 0.0;
    let mut rows = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        match &config.price_model {
            PriceModel::GeometricBrownian { mu, sigma } => {
                let drift = (mu - 0.5 * sigma * sigma) * config.dt;
                let vol = sigma * config.dt.sqrt();
                c[0] = 1.0;
                for ci in c.iter_mut().skip(1) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *ci *= (drift + vol * z).exp();
                }
            }
            PriceModel::Replay(prices) => c.clone_from(&prices[step - 1]),
        }
        let row = sim_step(&mut pool, &c, &r0, config.profit_threshold, &mut cum, step).map_err(|e| {
            e.context(&format!(
                "step {step} (reserves {:?}, prices {:?})",
                pool.reserves().as_slice(),
                c
            ))
        })?;
        rows.push(row);
    }
    Ok(SimTrace { n, rows })
}

fn sim_step(
    pool: &mut PoolSpec,
    c: &[f64],
    r0: &Reserves,
    threshold: f64,
    cum: &mut f64,
    step: usize,
) -> Result<SimRow> {
    let prices = PriceVector::new(c.to_vec())?;
    let value_before = reserve_value(pool, &prices)?.value;
    let arb = solve_arbitrage(pool, &prices)?;
    let trade = if arb.profit > threshold {
        *pool = pool.with_reserves(arb.post_reserves.clone())?;
        *cum += arb.profit;
        arb.trade
    } else {
        Trade::zero(pool.n())
    };
    let reported = reported_price(pool, pool.reserves(), 0)?.normalized;
    let value_after = reserve_value(pool, &prices)?.value;
    Ok(SimRow {
        step,
        prices: c.to_vec(),
        trade,
        reserves: pool.reserves().as_slice().to_vec(),
        reported,
        value_before,
        reserve_value: value_after,
        hold_value: prices.dot(r0.as_slice()),
        cum_profit: *cum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStats {
    pub steps: usize,
    pub final_value: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub total_profit: f64,
    /// Largest `|(pⱼ/pᵢ)/(cⱼ/cᵢ) − 1|` over steps and coin pairs, `p` the
    /// reported price after the step.
    pub max_price_gap: f64,
    pub trade_fraction: f64,
    /// Smallest within-step change of the reserve value (post − pre).
    pub min_value_change: f64,
}

pub fn trace_stats(trace: &SimTrace) -> Result<TraceStats> {
    let Some(last) = trace.rows.last() else {
        return Err(CfmmError::InvalidInput("empty trace".into()));
    };
    let mut stats = TraceStats {
        steps: trace.rows.len(),
        final_value: last.reserve_value,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        total_profit: last.cum_profit,
        max_price_gap: 0.0,
        trade_fraction: 0.0,
        min_value_change: f64::INFINITY,
    };
    let mut trades = 0;
    for row in &trace.rows {
        stats.min_value = stats.min_value.min(row.reserve_value);
        stats.max_value = stats.max_value.max(row.reserve_value);
        stats.min_value_change = stats.min_value_change.min(row.reserve_value - row.value_before);
        if !row.trade.is_zero() {
            trades += 1;
        }
        for i in 0..trace.n {
            for j in i + 1..trace.n {
                let reported = row.reported[j] / row.reported[i];
                let reference = row.prices[j] / row.prices[i];
                stats.max_price_gap = stats.max_price_gap.max((reported / reference - 1.0).abs());
            }
        }
    }
    stats.trade_fraction = trades as f64 / trace.rows.len() as f64;
    Ok(stats)
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

impl SimTrace {
    pub fn csv_header(&self) -> Vec<String> {
        let n = self.n;
        let mut h = vec!["step".to_string()];
        for prefix in ["price", "delta", "lambda", "reserve", "reported"] {
            h.extend(numbered(prefix, n));
        }
        h.extend(["reserve_value", "hold_value", "cum_profit"].map(String::from));
        h
    }

    /// Writes the trace as CSV. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for row in &self.rows {
            let mut rec = vec![row.step.to_string()];
            for v in row
                .prices
                .iter()
                .chain(&row.trade.delta)
                .chain(&row.trade.lambda)
                .chain(&row.reserves)
                .chain(&row.reported)
                .chain([&row.reserve_value, &row.hold_value, &row.cum_profit])
            {
                rec.push(v.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| CfmmError::Io(e.to_string()))
    }
}

/// Price rows from a CSV with `price_1, …, price_n` columns (other columns,
/// such as a full trace's, are ignored).
pub fn read_price_csv<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let mut cols = Vec::new();
    for i in 1.. {
        let name = format!("price_{i}");
        match headers.iter().position(|h| h.trim() == name) {
            Some(pos) => cols.push(pos),
            None => break,
        }
    }
    if cols.is_empty() {
        return Err(CfmmError::InvalidInput("price CSV has no price_1 column".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = cols
            .iter()
            .map(|&c| {
                let cell = rec.get(c).unwrap_or("").trim();
                cell.parse::<f64>().map_err(|_| {
                    CfmmError::InvalidInput(format!("price CSV row {}: cannot parse {cell:?}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
