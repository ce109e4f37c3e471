//! Reweighting rules: the power transform, its linearized variant and the
//! cap-and-redistribute baseline.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::{compensated_sum, normalize, WeightVector};

pub const DEFAULT_KNOT: f64 = 0.01;
pub const DEFAULT_CAP_THRESHOLD: f64 = 0.045;
pub const DEFAULT_CAP_TARGET: f64 = 0.40;

/// `x^p` on `[0, 1]` with `0^p = 0` for every `p`, including `p = 0`.
#[inline]
pub fn power_of(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if p == 1.0 {
        x
    } else {
        (p * x.ln()).exp()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("exponent p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRule {
    p: f64,
}

impl PowerRule {
    pub fn new(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Power transform with the curve replaced by its chord through the origin
/// below `knot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizedPowerRule {
    p: f64,
    knot: f64,
}

impl LinearizedPowerRule {
    pub fn new(p: f64, knot: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(knot > 0.0 && knot < 1.0) {
            return Err(Error::InvalidParameter(format!("knot must lie in (0, 1), got {knot}")));
        }
        Ok(Self { p, knot })
    }

    pub fn with_default_knot(p: f64) -> Result<Self> {
        Self::new(p, DEFAULT_KNOT)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn knot(&self) -> f64 {
        self.knot
    }

    /// Slope of the linear piece, `knot^(p-1)`.
    pub fn slope(&self) -> f64 {
        if self.p == 1.0 {
            1.0
        } else {
            ((self.p - 1.0) * self.knot.ln()).exp()
        }
    }

    /// The piecewise transform applied to a single weight.
    pub fn apply_one(&self, x: f64) -> f64 {
        if x >= self.knot {
            power_of(x, self.p)
        } else {
            self.slope() * x
        }
    }
}

/// Rescale every weight above `threshold` so that group sums to
/// `target_aggregate`; the rest absorbs the remainder proportionally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapRule {
    threshold: f64,
    target_aggregate: f64,
}

impl CapRule {
    pub fn new(threshold: f64, target_aggregate: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < target_aggregate && target_aggregate < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cap rule needs 0 < threshold < target_aggregate < 1, got threshold {threshold}, target {target_aggregate}"
            )));
        }
        Ok(Self {
            threshold,
            target_aggregate,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn target_aggregate(&self) -> f64 {
        self.target_aggregate
    }
}

impl Default for CapRule {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_CAP_THRESHOLD,
            target_aggregate: DEFAULT_CAP_TARGET,
        }
    }
}

pub fn power_rebalance(mu: &WeightVector, rule: PowerRule) -> Result<WeightVector> {
    let raw: Vec<f64> = mu.weights().iter().map(|&x| power_of(x, rule.p)).collect();
    renormalize(mu, &raw)
}

pub fn linearized_power_rebalance(mu: &WeightVector, rule: LinearizedPowerRule) -> Result<WeightVector> {
    let slope = rule.slope();
    let raw: Vec<f64> = mu
        .weights()
        .iter()
        .map(|&x| if x >= rule.knot { power_of(x, rule.p) } else { slope * x })
        .collect();
    renormalize(mu, &raw)
}

/// Applies the rescaling unconditionally whenever some weight exceeds the
/// threshold. Ties at the threshold stay in the complement.
pub fn cap_rebalance(mu: &WeightVector, rule: CapRule) -> Result<WeightVector> {
    let w = mu.weights();
    let (large, rest): (Vec<f64>, Vec<f64>) = w.iter().partition(|&&x| x > rule.threshold);
    if large.is_empty() {
        return Ok(mu.clone());
    }
    let large_sum = compensated_sum(&large);
    // Equals 1 - large_sum but is exactly zero when nothing is left over.
    let complement = compensated_sum(&rest);
    if complement <= 0.0 {
        return Err(Error::DegenerateComplement);
    }
    let up = rule.target_aggregate / large_sum;
    let down = (1.0 - rule.target_aggregate) / complement;
    let raw: Vec<f64> = w
        .iter()
        .map(|&x| if x > rule.threshold { x * up } else { x * down })
        .collect();
    renormalize(mu, &raw)
}

fn renormalize(mu: &WeightVector, raw: &[f64]) -> Result<WeightVector> {
    match normalize(raw) {
        Ok(w) => mu.with_weights(w),
        Err(Error::ZeroAggregate) => Err(Error::AllWeightsZero),
        Err(e) => Err(e),
    }
}

/// One of the three reweighting methods with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RebalanceRule {
    Power(PowerRule),
    LinearizedPower(LinearizedPowerRule),
    Cap(CapRule),
}

impl RebalanceRule {
    pub fn apply(&self, mu: &WeightVector) -> Result<WeightVector> {
        match *self {
            RebalanceRule::Power(r) => power_rebalance(mu, r),
            RebalanceRule::LinearizedPower(r) => linearized_power_rebalance(mu, r),
            RebalanceRule::Cap(r) => cap_rebalance(mu, r),
        }
    }

    /// Method name as used on the command line.
    pub fn method(&self) -> &'static str {
        match self {
            RebalanceRule::Power(_) => "power",
            RebalanceRule::LinearizedPower(_) => "linpower",
            RebalanceRule::Cap(_) => "cap",
        }
    }

    /// Named parameters in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            RebalanceRule::Power(r) => vec![("p", r.p)],
            RebalanceRule::LinearizedPower(r) => vec![("p", r.p), ("knot", r.knot)],
            RebalanceRule::Cap(r) => vec![
                ("threshold", r.threshold),
                ("target_aggregate", r.target_aggregate),
            ],
        }
    }
}

impl fmt::Display for RebalanceRule {
    /// Renders the same syntax [`FromStr`] accepts, e.g. `linpower:p=0.5:knot=0.01`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method())?;
        for (k, v) in self.params() {
            write!(f, ":{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for RebalanceRule {
    type Err = Error;

    /// Parses `name[:key=value]...`, for example `power:p=0.5` or
    /// `cap:threshold=0.045:target=0.4`. Missing cap and knot parameters
    /// take their defaults; `p` is required for the power methods.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().trim();
        let mut p = None;
        let mut knot = None;
        let mut threshold = None;
        let mut target = None;
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{part}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("`{value}` is not a number")))?;
            let slot = match key.trim() {
                "p" => &mut p,
                "knot" => &mut knot,
                "threshold" => &mut threshold,
                "target" | "target_aggregate" => &mut target,
                other => return Err(Error::InvalidParameter(format!("unknown parameter `{other}`"))),
            };
            *slot = Some(value);
        }
        let need_p = || p.ok_or_else(|| Error::InvalidParameter(format!("method `{name}` needs p")));
        let reject = |what: &str, v: Option<f64>| match v {
            Some(_) => Err(Error::InvalidParameter(format!("method `{name}` takes no {what}"))),
            None => Ok(()),
        };
        match name {
            "power" => {
                reject("knot", knot)?;
                reject("threshold", threshold)?;
                reject("target", target)?;
                Ok(RebalanceRule::Power(PowerRule::new(need_p()?)?))
            }
            "linpower" => {
                reject("threshold", threshold)?;
                reject("target", target)?;
                Ok(RebalanceRule::LinearizedPower(LinearizedPowerRule::new(
                    need_p()?,
                    knot.unwrap_or(DEFAULT_KNOT),
                )?))
            }
            "cap" => {
                reject("p", p)?;
                reject("knot", knot)?;
                Ok(RebalanceRule::Cap(CapRule::new(
                    threshold.unwrap_or(DEFAULT_CAP_THRESHOLD),
                    target.unwrap_or(DEFAULT_CAP_TARGET),
                )?))
            }
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Parses a comma-separated list of rules.
pub fn parse_rule_list(s: &str) -> Result<Vec<RebalanceRule>> {
    s.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(str::parse)
        .collect()
}
