//! Before/after comparison of a rebalance: order inversions, max-weight
//! increase, turnover and concentration metrics.

use std::collections::HashMap;

use serde::Serialize;

use crate::calibration::top_k_sum;
use crate::error::{Error, Result};
use crate::parallel::map_collect;
use crate::transforms::{power_of, RebalanceRule};
use crate::weights::{compensated_sum, WeightVector};

/// `k` values reported in every [`DiagnosticsReport`].
pub const REPORTED_TOP_K: [usize; 4] = [1, 5, 6, 10];
pub const DEFAULT_REPORTING_P: f64 = 0.5;
const MAX_INCREASE_SLACK: f64 = 1e-12;

/// A pair whose order flipped: `mu_low < mu_high` but `eta_low > eta_high`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderViolation {
    pub identifier_low: String,
    pub identifier_high: String,
    pub mu_low: f64,
    pub mu_high: f64,
    pub eta_low: f64,
    pub eta_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopKPair {
    pub k: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationMetrics {
    pub hhi: f64,
    /// `(k, sum of the k largest weights)`; `k` beyond `n` sums every weight.
    pub top_k_sums: Vec<(usize, f64)>,
    pub diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub order_violations: Vec<OrderViolation>,
    pub max_before: f64,
    pub max_after: f64,
    pub max_increased: bool,
    pub turnover: f64,
    pub hhi_before: f64,
    pub hhi_after: f64,
    pub top_k_sums: Vec<TopKPair>,
    pub reporting_p: f64,
    pub diversity_before: f64,
    pub diversity_after: f64,
}

impl DiagnosticsReport {
    /// No order violation and no max-weight increase.
    pub fn is_clean(&self) -> bool {
        self.order_violations.is_empty() && !self.max_increased
    }
}

/// `eta` weights laid out in `mu`'s identifier order.
fn align(mu: &WeightVector, eta: &WeightVector) -> Result<Vec<f64>> {
    if mu.same_ids(eta) {
        return Ok(eta.weights().to_vec());
    }
    if mu.len() != eta.len() {
        let extra = mu
            .ids()
            .iter()
            .find(|id| eta.get(id).is_none())
            .or_else(|| eta.ids().iter().find(|id| mu.get(id).is_none()))
            .cloned()
            .unwrap_or_default();
        return Err(Error::IdentifierMismatch(extra));
    }
    let index: HashMap<&str, f64> = eta.iter().collect();
    mu.ids()
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::IdentifierMismatch(id.clone()))
        })
        .collect()
}

/// Every pair with `mu_i < mu_j` and `eta_i > eta_j`.
///
/// Detection sorts by `(mu, eta)` and checks that `eta` is nondecreasing
/// along that order; pairs are only enumerated when that check fails.
pub fn find_order_violations(mu: &WeightVector, eta: &WeightVector) -> Result<Vec<OrderViolation>> {
    let after = align(mu, eta)?;
    let before = mu.weights();
    let mut order: Vec<usize> = (0..before.len()).collect();
    order.sort_by(|&a, &b| before[a].total_cmp(&before[b]).then(after[a].total_cmp(&after[b])));

    if order.windows(2).all(|w| after[w[0]] <= after[w[1]]) {
        return Ok(Vec::new());
    }

    let ids = mu.ids();
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if before[i] < before[j] && after[i] > after[j] {
                out.push(OrderViolation {
                    identifier_low: ids[i].clone(),
                    identifier_high: ids[j].clone(),
                    mu_low: before[i],
                    mu_high: before[j],
                    eta_low: after[i],
                    eta_high: after[j],
                });
            }
        }
    }
    Ok(out)
}

/// One-way turnover `0.5 * sum |eta_i - mu_i|` over the union of
/// identifiers; an identifier missing on one side counts as weight zero there.
pub fn turnover(mu: &WeightVector, eta: &WeightVector) -> f64 {
    if mu.same_ids(eta) {
        let diffs: Vec<f64> = mu.weights().iter().zip(eta.weights()).map(|(m, e)| (e - m).abs()).collect();
        return (0.5 * compensated_sum(&diffs)).clamp(0.0, 1.0);
    }
    let after: HashMap<&str, f64> = eta.iter().collect();
    let before: HashMap<&str, f64> = mu.iter().collect();
    let mut diffs: Vec<f64> = mu
        .iter()
        .map(|(id, m)| (after.get(id).copied().unwrap_or(0.0) - m).abs())
        .collect();
    diffs.extend(eta.iter().filter(|(id, _)| !before.contains_key(id)).map(|(_, e)| e));
    (0.5 * compensated_sum(&diffs)).clamp(0.0, 1.0)
}

pub fn hhi(w: &WeightVector) -> f64 {
    let squares: Vec<f64> = w.weights().iter().map(|x| x * x).collect();
    compensated_sum(&squares)
}

/// Diversity `(sum w_i^p)^(1/p)`; 1 for a single-stock index, `n^(1/p - 1)`
/// for `n` equal weights.
pub fn diversity(w: &WeightVector, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("reporting exponent must lie in (0, 1), got {p}")));
    }
    let powers: Vec<f64> = w.weights().iter().map(|&x| power_of(x, p)).collect();
    Ok(compensated_sum(&powers).powf(1.0 / p))
}

pub fn concentration_metrics(w: &WeightVector, reporting_p: f64) -> Result<ConcentrationMetrics> {
    Ok(ConcentrationMetrics {
        hhi: hhi(w),
        top_k_sums: REPORTED_TOP_K
            .iter()
            .map(|&k| (k, top_k_sum(w.weights(), k)))
            .collect(),
        diversity: diversity(w, reporting_p)?,
    })
}

pub fn diagnose(mu: &WeightVector, eta: &WeightVector, reporting_p: f64) -> Result<DiagnosticsReport> {
    let order_violations = find_order_violations(mu, eta)?;
    let before = concentration_metrics(mu, reporting_p)?;
    let after = concentration_metrics(eta, reporting_p)?;
    let max_before = mu.max();
    let max_after = eta.max();
    Ok(DiagnosticsReport {
        order_violations,
        max_before,
        max_after,
        max_increased: max_after > max_before + MAX_INCREASE_SLACK,
        turnover: turnover(mu, eta),
        hhi_before: before.hhi,
        hhi_after: after.hhi,
        top_k_sums: before
            .top_k_sums
            .iter()
            .zip(&after.top_k_sums)
            .map(|(&(k, b), &(_, a))| TopKPair { k, before: b, after: a })
            .collect(),
        reporting_p,
        diversity_before: before.diversity,
        diversity_after: after.diversity,
    })
}

/// Result of applying one rule in [`compare_methods`].
#[derive(Debug, Clone, PartialEq)]
pub struct MethodComparison {
    pub rule: RebalanceRule,
    pub weights: WeightVector,
    pub report: DiagnosticsReport,
}

/// Applies each rule to `mu` and diagnoses the result, keeping the rule order.
/// Rules are evaluated in parallel when the `parallel` feature is on.
pub fn compare_methods(
    mu: &WeightVector,
    rules: &[RebalanceRule],
    reporting_p: f64,
) -> Result<Vec<MethodComparison>> {
    map_collect(rules, |rule| {
        let weights = rule.apply(mu)?;
        let report = diagnose(mu, &weights, reporting_p)?;
        Ok(MethodComparison {
            rule: *rule,
            weights,
            report,
        })
    })
    .into_iter()
    .enumerate()
    .map(|(index, r)| {
        r.map_err(|e: Error| Error::RuleFailed {
            index,
            rule: rules[index].to_string(),
            source: Box::new(e),
        })
    })
    .collect()
}
