//! Reweighting of capitalization-weighted indexes.
//!
//! The central rule raises every market-cap weight to a power `p` in
//! `[0, 1]` and renormalizes. Unlike capping the largest names and spreading
//! the excess over the rest, this never reorders constituents and never
//! raises the largest weight. `p = 1` keeps the cap-weighted index and
//! `p = 0` gives equal weights over the positive entries.
//!
//! Modules:
//! - [`weights`]: constituents and validated weight vectors
//! - [`transforms`]: power, linearized power and cap-and-redistribute rules
//! - [`calibration`]: choosing `p` against a max-weight or top-k bound
//! - [`diagnostics`]: order inversions, max increase, turnover, concentration
//! - [`io`] and [`cli`]: CSV/JSON files and the `reweight` command
//! - [`parallel`]: batch evaluation over many vectors or exponents

pub mod calibration;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod parallel;
pub mod transforms;
pub mod weights;

pub use calibration::{concentration_statistic, solve_exponent, CalibrationResult, CalibrationTarget, Statistic};
pub use diagnostics::{
    compare_methods, concentration_metrics, diagnose, find_order_violations, turnover, DiagnosticsReport,
    MethodComparison, OrderViolation,
};
pub use error::{Error, Result};
pub use transforms::{
    cap_rebalance, linearized_power_rebalance, power_rebalance, CapRule, LinearizedPowerRule, PowerRule,
    RebalanceRule,
};
pub use weights::{normalize, weights_from_market_caps, Constituent, WeightVector};
