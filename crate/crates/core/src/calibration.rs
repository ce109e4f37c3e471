//! Choosing the exponent `p` so the power-rebalanced index meets a
//! concentration bound.
//!
//! Both supported statistics are nondecreasing in `p`, so the largest
//! feasible exponent is found by bisection on `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::transforms::{power_rebalance, PowerRule};
use crate::weights::WeightVector;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
/// Slack allowed on the bound when accepting an endpoint of the bracket.
pub const BOUND_SLACK: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    MaxWeight,
    TopKSum { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTarget {
    statistic: Statistic,
    bound: f64,
}

impl CalibrationTarget {
    pub fn max_weight(bound: f64) -> Result<Self> {
        Self::new(Statistic::MaxWeight, bound)
    }

    pub fn top_k_sum(k: usize, bound: f64) -> Result<Self> {
        Self::new(Statistic::TopKSum { k }, bound)
    }

    pub fn new(statistic: Statistic, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound < 1.0) {
            return Err(Error::InvalidParameter(format!("bound must lie in (0, 1), got {bound}")));
        }
        if statistic == (Statistic::TopKSum { k: 0 }) {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(Self { statistic, bound })
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub p_star: f64,
    pub achieved: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Sum of the `k` largest weights. Ties are irrelevant since values are summed.
pub fn top_k_sum(weights: &[f64], k: usize) -> f64 {
    let mut sorted = weights.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sorted.iter().take(k).sum()
}

pub fn concentration_statistic(mu: &WeightVector, statistic: Statistic) -> Result<f64> {
    match statistic {
        Statistic::MaxWeight => Ok(mu.max()),
        Statistic::TopKSum { k } => {
            if k > mu.len() {
                return Err(Error::KExceedsN { k, n: mu.len() });
            }
            Ok(top_k_sum(mu.weights(), k))
        }
    }
}

fn statistic_at(mu: &WeightVector, statistic: Statistic, p: f64) -> Result<f64> {
    concentration_statistic(&power_rebalance(mu, PowerRule::new(p)?)?, statistic)
}

/// Largest `p` in `[0, 1]` whose power-rebalanced weights satisfy the target.
pub fn solve_exponent(mu: &WeightVector, target: CalibrationTarget, tol: f64) -> Result<CalibrationResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let stat = target.statistic;
    let bound = target.bound;

    let floor = statistic_at(mu, stat, 0.0)?;
    let at_one = concentration_statistic(mu, stat)?;
    if at_one <= bound {
        return Ok(CalibrationResult {
            p_star: 1.0,
            achieved: at_one,
            iterations: 0,
            converged: true,
        });
    }
    if floor > bound {
        return Err(Error::Infeasible { bound, floor });
    }

    // g(lo) <= 0 < g(hi) holds throughout.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut lo_stat = floor;
    let mut hi_stat = at_one;
    let mut iterations = 0;
    while hi - lo >= tol {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let s = statistic_at(mu, stat, mid)?;
        let g = s - bound;
        if g <= 0.0 {
            lo = mid;
            lo_stat = s;
        } else {
            hi = mid;
            hi_stat = s;
        }
        if g.abs() < RESIDUAL_TOL {
            break;
        }
    }

    let (p_star, achieved) = if hi_stat <= bound + BOUND_SLACK {
        (hi, hi_stat)
    } else {
        (lo, lo_stat)
    };
    Ok(CalibrationResult {
        p_star,
        achieved,
        iterations,
        converged: true,
    })
}
