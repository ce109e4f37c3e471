//! Constituents and validated index weight vectors.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a [`WeightVector`].
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A named index member with its market capitalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Constituent {
    identifier: String,
    market_cap: f64,
    price: Option<f64>,
    shares_outstanding: Option<f64>,
}

impl Constituent {
    /// Constituent with a directly supplied market capitalization.
    pub fn with_market_cap(identifier: impl Into<String>, market_cap: f64) -> Result<Self> {
        let identifier = identifier.into();
        if identifier.is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        if !market_cap.is_finite() {
            return Err(Error::NonFiniteNumber {
                context: format!("market cap of `{identifier}`"),
            });
        }
        if market_cap < 0.0 {
            return Err(Error::NegativeMarketCap {
                id: identifier,
                value: market_cap,
            });
        }
        Ok(Self {
            identifier,
            market_cap,
            price: None,
            shares_outstanding: None,
        })
    }

    /// Constituent whose market capitalization is `price * shares`.
    pub fn from_price_shares(identifier: impl Into<String>, price: f64, shares: f64) -> Result<Self> {
        let identifier = identifier.into();
        if identifier.is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        for (name, v) in [("price", price), ("shares", shares)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteNumber {
                    context: format!("{name} of `{identifier}`"),
                });
            }
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} of `{identifier}` must be positive, got {v}"
                )));
            }
        }
        let market_cap = price * shares;
        if !market_cap.is_finite() {
            return Err(Error::NonFiniteNumber {
                context: format!("market cap of `{identifier}`"),
            });
        }
        Ok(Self {
            identifier,
            market_cap,
            price: Some(price),
            shares_outstanding: Some(shares),
        })
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn market_cap(&self) -> f64 {
        self.market_cap
    }

    pub fn price(&self) -> Option<f64> {
        self.price
    }

    pub fn shares_outstanding(&self) -> Option<f64> {
        self.shares_outstanding
    }
}

/// Ordered list of `(identifier, weight)` pairs.
///
/// Every weight lies in `[0, 1]`, the weights sum to one within
/// [`SUM_TOLERANCE`], identifiers are unique and input order is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    ids: Arc<[String]>,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(ids: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if ids.len() != weights.len() {
            return Err(Error::LengthMismatch(ids.len(), weights.len()));
        }
        if ids.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        check_unique(&ids)?;
        check_weights(&ids, &weights)?;
        Ok(Self {
            ids: ids.into(),
            weights,
        })
    }

    /// Same identifiers, new weights. The identifier list is shared, not copied.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.ids.len() {
            return Err(Error::LengthMismatch(self.ids.len(), weights.len()));
        }
        check_weights(&self.ids, &weights)?;
        Ok(Self {
            ids: Arc::clone(&self.ids),
            weights,
        })
    }

    /// True when both vectors list the same identifiers in the same order.
    pub fn same_ids(&self, other: &WeightVector) -> bool {
        Arc::ptr_eq(&self.ids, &other.ids) || self.ids == other.ids
    }

    /// Builds a vector from `(identifier, weight)` pairs.
    pub fn from_pairs<S, I>(pairs: I) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, f64)>,
    {
        let (ids, weights): (Vec<String>, Vec<f64>) =
            pairs.into_iter().map(|(s, w)| (s.into(), w)).unzip();
        Self::new(ids, weights)
    }

    /// Weights with generated identifiers `c0`, `c1`, ...
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let ids = (0..weights.len()).map(|i| format!("c{i}")).collect();
        Self::new(ids, weights)
    }

    /// Normalizes nonnegative raw scores and attaches identifiers.
    pub fn from_raw(ids: Vec<String>, raw: &[f64]) -> Result<Self> {
        Self::new(ids, normalize(raw)?)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// Always false for a constructed vector; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|x| x == id).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.ids.iter().map(String::as_str).zip(self.weights.iter().copied())
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Number of strictly positive weights.
    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

/// Market-cap weights `cap_i / sum(cap)`, in input order.
pub fn weights_from_market_caps(universe: &[Constituent]) -> Result<WeightVector> {
    if universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let ids: Vec<String> = universe.iter().map(|c| c.identifier.clone()).collect();
    check_unique(&ids)?;
    let caps: Vec<f64> = universe.iter().map(|c| c.market_cap).collect();
    if let Some(c) = universe.iter().find(|c| c.market_cap < 0.0) {
        return Err(Error::NegativeMarketCap {
            id: c.identifier.clone(),
            value: c.market_cap,
        });
    }
    WeightVector::from_raw(ids, &caps)
}

/// Divides every entry by the total.
pub fn normalize(raw: &[f64]) -> Result<Vec<f64>> {
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFiniteNumber {
                context: format!("at entry {index}"),
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    let total = compensated_sum(raw);
    if total <= 0.0 {
        return Err(Error::ZeroAggregate);
    }
    Ok(raw.iter().map(|&x| x / total).collect())
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_weights(ids: &[String], weights: &[f64]) -> Result<()> {
    for (id, &w) in ids.iter().zip(weights) {
        if !w.is_finite() {
            return Err(Error::NonFiniteNumber {
                context: format!("weight of `{id}`"),
            });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::WeightOutOfRange {
                id: id.clone(),
                value: w,
            });
        }
    }
    let sum = compensated_sum(weights);
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::WeightSumMismatch { sum });
    }
    Ok(())
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if id.is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateIdentifier(id.clone()));
        }
    }
    Ok(())
}
