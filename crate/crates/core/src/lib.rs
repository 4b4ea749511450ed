//! Analysis engine for constant function market makers (CFMMs).
//!
//! Pools are described by a concave potential `ψ` over their reserves. The
//! crate computes optimal arbitrage against a reference market, reported
//! prices and output costs, the value of the reserves, and checks the
//! path-deficiency and ratchet properties of fee-charging pools.

pub mod arbitrage;
pub mod config;
pub mod error;
mod frontier;
pub mod numeric;
pub mod pool;
pub mod pricing;
pub mod sim;
pub mod value;
pub mod verify;

pub use arbitrage::{profit, solve_arbitrage, solve_arbitrage_feeless, ArbitrageResult, PriceVector, SolveStatus};
pub use error::{CfmmError, Result};
pub use numeric::ExtReal;
pub use pool::{InvariantLevel, PoolKind, PoolSpec, Reserves, Trade};
pub use pricing::{cost_of_output, marginal_price_estimate, reported_price, ReportedPrice};
pub use value::{curve_value_lower_bound, dual_g, reserve_value, ReserveValueResult, ValueMethod};
pub use sim::{simulate, trace_stats, PriceModel, SimConfig, SimRow, SimTrace, TraceStats};
