//! Oracles and randomized property checks.

pub mod oracle;
pub mod projection;
pub mod report;
pub mod strategy;

pub use oracle::brute_force_arbitrage;
pub use projection::{check_monotone_phi, monotone_phi, relaxed_arbitrage};
pub use report::{Failure, Report};
pub use strategy::{
    check_path_deficiency, check_reachable_decomposition, check_reserve_floor, in_dominated_interior,
    random_boundary_trade, random_strategy, StrategyTrace,
};
