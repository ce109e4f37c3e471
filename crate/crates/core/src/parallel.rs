//! Batch evaluation: many vectors under one rule, or one vector across a
//! grid of exponents.
//!
//! With the `parallel` feature (on by default) the batch entry points fan
//! out over rayon's global pool; without it they run sequentially. The
//! `*_seq` variants are always sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::calibration::{concentration_statistic, Statistic};
use crate::error::Result;
use crate::transforms::{power_rebalance, PowerRule, RebalanceRule};
use crate::weights::WeightVector;

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// True when batch operations use the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Power-rebalances `mu` at every exponent in `ps`.
pub fn power_sweep(mu: &WeightVector, ps: &[f64]) -> Result<Vec<WeightVector>> {
    map_collect(ps, |&p| power_rebalance(mu, PowerRule::new(p)?))
        .into_iter()
        .collect()
}

pub fn power_sweep_seq(mu: &WeightVector, ps: &[f64]) -> Result<Vec<WeightVector>> {
    ps.iter().map(|&p| power_rebalance(mu, PowerRule::new(p)?)).collect()
}

/// Applies `rule` to every vector; results stay in input order.
pub fn batch_rebalance(mus: &[WeightVector], rule: &RebalanceRule) -> Vec<Result<WeightVector>> {
    map_collect(mus, |mu| rule.apply(mu))
}

pub fn batch_rebalance_seq(mus: &[WeightVector], rule: &RebalanceRule) -> Vec<Result<WeightVector>> {
    mus.iter().map(|mu| rule.apply(mu)).collect()
}

/// Concentration statistic of the power-rebalanced weights at each `p`.
pub fn statistic_profile(mu: &WeightVector, statistic: Statistic, ps: &[f64]) -> Result<Vec<f64>> {
    map_collect(ps, |&p| {
        concentration_statistic(&power_rebalance(mu, PowerRule::new(p)?)?, statistic)
    })
    .into_iter()
    .collect()
}

/// Evenly spaced exponents `0, 1/steps, ..., 1`.
pub fn exponent_grid(steps: usize) -> Vec<f64> {
    assert!(steps > 0, "grid needs at least one step");
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::CapRule;

    fn wv(w: &[f64]) -> WeightVector {
        WeightVector::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn parallel_matches_sequential() {
        let mu = wv(&[0.4, 0.25, 0.2, 0.1, 0.05]);
        let grid = exponent_grid(50);
        assert_eq!(power_sweep(&mu, &grid).unwrap(), power_sweep_seq(&mu, &grid).unwrap());

        let mus: Vec<_> = (1..20)
            .map(|i| {
                let raw: Vec<f64> = (0..10).map(|j| ((i * 7 + j * 3) % 11 + 1) as f64).collect();
                WeightVector::from_raw((0..10).map(|j| format!("s{j}")).collect(), &raw).unwrap()
            })
            .collect();
        let rule = RebalanceRule::Cap(CapRule::default());
        let a: Vec<_> = batch_rebalance(&mus, &rule).into_iter().map(Result::unwrap).collect();
        let b: Vec<_> = batch_rebalance_seq(&mus, &rule).into_iter().map(Result::unwrap).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn profile_endpoints() {
        let mu = wv(&[0.7, 0.3]);
        let prof = statistic_profile(&mu, Statistic::MaxWeight, &[0.0, 1.0]).unwrap();
        assert!((prof[0] - 0.5).abs() < 1e-15);
        assert!((prof[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_bad_exponent() {
        assert!(power_sweep(&wv(&[0.5, 0.5]), &[0.5, 2.0]).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = exponent_grid(100);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
    }
}
