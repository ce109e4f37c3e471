use proptest::prelude::*;
use reweight::calibration::{top_k_sum, DEFAULT_TOL};
use reweight::diagnostics::{diversity, hhi};
use reweight::io::{parse_weight_file, RebalanceReport, WeightColumn};
use reweight::parallel::{exponent_grid, statistic_profile};
use reweight::{
    find_order_violations, linearized_power_rebalance, normalize, power_rebalance, solve_exponent, turnover,
    weights_from_market_caps, CalibrationTarget, Constituent, LinearizedPowerRule, PowerRule, RebalanceRule,
    Statistic, WeightVector,
};

/// Raw scores with occasional zeros and repeated values.
fn raw_scores(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![6 => 1e-6..1.0f64, 1 => Just(0.0), 1 => Just(0.25), 1 => Just(0.5)],
        2..max_len,
    )
    .prop_filter("needs a positive entry", |v| v.iter().any(|&x| x > 0.0))
}

fn weight_vector(max_len: usize) -> impl Strategy<Value = WeightVector> {
    raw_scores(max_len).prop_map(|raw| {
        let ids = (0..raw.len()).map(|i| format!("S{i:03}")).collect();
        WeightVector::from_raw(ids, &raw).unwrap()
    })
}

fn positive_vector(max_len: usize) -> impl Strategy<Value = WeightVector> {
    prop::collection::vec(1e-4..1.0f64, 2..max_len).prop_map(|raw| {
        let ids = (0..raw.len()).map(|i| format!("S{i:03}")).collect();
        WeightVector::from_raw(ids, &raw).unwrap()
    })
}

/// Exhaustive pair scan.
fn brute_force_violations(mu: &[f64], eta: &[f64]) -> usize {
    let mut n = 0;
    for i in 0..mu.len() {
        for j in 0..mu.len() {
            if mu[i] < mu[j] && eta[i] > eta[j] {
                n += 1;
            }
        }
    }
    n
}

proptest! {
    #[test]
    fn normalize_sums_to_one_and_is_idempotent(raw in raw_scores(200)) {
        let once = normalize(&raw).unwrap();
        prop_assert!((once.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(once.iter().all(|&x| x >= 0.0));
        let twice = normalize(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn market_cap_weights_are_scale_invariant(raw in raw_scores(100), scale in 1e-6..1e9f64) {
        let make = |s: f64| -> Vec<Constituent> {
            raw.iter().enumerate()
                .map(|(i, &c)| Constituent::with_market_cap(format!("S{i}"), c * s).unwrap())
                .collect()
        };
        let a = weights_from_market_caps(&make(1.0)).unwrap();
        let b = weights_from_market_caps(&make(scale)).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn power_guarantees(mu in weight_vector(100), p in 0.0..=1.0f64) {
        let eta = power_rebalance(&mu, PowerRule::new(p).unwrap()).unwrap();
        let (m, e) = (mu.weights(), eta.weights());
        prop_assert!((e.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for i in 0..m.len() {
            for j in 0..m.len() {
                if m[i] < m[j] {
                    prop_assert!(e[i] <= e[j], "order flipped at p={}", p);
                    // Strict once the gap survives rounding; p = 0 collapses positives by design.
                    if p >= 0.01 && m[j] > m[i] * (1.0 + 1e-6) {
                        prop_assert!(e[i] < e[j]);
                    }
                } else if m[i] == m[j] {
                    prop_assert!((e[i] - e[j]).abs() <= 1e-14);
                }
            }
        }
        prop_assert!(eta.max() <= mu.max() + 1e-12);
        let min_pos = |w: &[f64]| w.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
        prop_assert!(min_pos(e) >= min_pos(m) - 1e-12);
        prop_assert!(find_order_violations(&mu, &eta).unwrap().is_empty());
    }

    #[test]
    fn power_endpoints(mu in weight_vector(100)) {
        let id = power_rebalance(&mu, PowerRule::new(1.0).unwrap()).unwrap();
        for (a, b) in id.weights().iter().zip(mu.weights()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        let eq = power_rebalance(&mu, PowerRule::new(0.0).unwrap()).unwrap();
        let m = mu.positive_count() as f64;
        for (a, b) in eq.weights().iter().zip(mu.weights()) {
            let expected = if *b > 0.0 { 1.0 / m } else { 0.0 };
            prop_assert!((a - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn power_composes(mu in weight_vector(100), p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
        let twice = power_rebalance(&power_rebalance(&mu, PowerRule::new(p).unwrap()).unwrap(), PowerRule::new(q).unwrap()).unwrap();
        let once = power_rebalance(&mu, PowerRule::new(p * q).unwrap()).unwrap();
        for (a, b) in twice.weights().iter().zip(once.weights()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn concentration_is_monotone_in_p(mu in positive_vector(100)) {
        let grid = exponent_grid(100);
        let unique_max = mu.weights().iter().filter(|&&w| w == mu.max()).count() == 1;
        if unique_max {
            let prof = statistic_profile(&mu, Statistic::MaxWeight, &grid).unwrap();
            prop_assert!(prof.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        }
        for k in [1, 2, 5, 6, 10] {
            if k > mu.len() { continue; }
            let prof = statistic_profile(&mu, Statistic::TopKSum { k }, &grid).unwrap();
            prop_assert!(prof.windows(2).all(|w| w[0] <= w[1] + 1e-14), "k={}", k);
        }
    }

    #[test]
    fn turnover_shrinks_toward_identity(mu in weight_vector(100)) {
        let grid = exponent_grid(50);
        let t: Vec<f64> = grid.iter()
            .map(|&p| turnover(&mu, &power_rebalance(&mu, PowerRule::new(p).unwrap()).unwrap()))
            .collect();
        prop_assert!(t.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(t[50] <= 1e-15);
    }

    #[test]
    fn power_reduces_concentration(mu in weight_vector(100), p in 0.0..1.0f64) {
        let eta = power_rebalance(&mu, PowerRule::new(p).unwrap()).unwrap();
        prop_assert!(hhi(&eta) <= hhi(&mu) + 1e-12);
        if p > 0.0 {
            prop_assert!(diversity(&eta, p).unwrap() >= diversity(&mu, p).unwrap() - 1e-12);
        }
        prop_assert!(diversity(&eta, 0.5).unwrap() >= diversity(&mu, 0.5).unwrap() - 1e-12);
    }

    #[test]
    fn linearized_guarantees(
        mu in weight_vector(100),
        p in 0.0..=1.0f64,
        knot in prop_oneof![Just(0.005), Just(0.01), Just(0.05), 1e-4..0.5f64],
    ) {
        let rule = LinearizedPowerRule::new(p, knot).unwrap();
        let eta = linearized_power_rebalance(&mu, rule).unwrap();
        let (m, e) = (mu.weights(), eta.weights());
        prop_assert!((e.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(find_order_violations(&mu, &eta).unwrap().is_empty());
        prop_assert!(eta.max() <= mu.max() + 1e-12);
        for i in 0..m.len() {
            for j in 0..m.len() {
                if m[i] > 0.0 && m[j] > 0.0 && m[i] < knot && m[j] < knot {
                    let want = m[i] / m[j];
                    prop_assert!(((e[i] / e[j]) - want).abs() <= 1e-12 * want);
                }
            }
        }
        if m.iter().all(|&x| x >= knot) {
            let pow = power_rebalance(&mu, PowerRule::new(p).unwrap()).unwrap();
            for (a, b) in e.iter().zip(pow.weights()) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn turnover_is_a_metric(raw in prop::collection::vec((1e-3..1.0f64, 1e-3..1.0f64, 1e-3..1.0f64), 2..60)) {
        let ids: Vec<String> = (0..raw.len()).map(|i| format!("S{i}")).collect();
        let pick = |f: fn(&(f64, f64, f64)) -> f64| {
            let r: Vec<f64> = raw.iter().map(f).collect();
            WeightVector::from_raw(ids.clone(), &r).unwrap()
        };
        let (a, b, c) = (pick(|t| t.0), pick(|t| t.1), pick(|t| t.2));
        prop_assert_eq!(turnover(&a, &a), 0.0);
        prop_assert!((turnover(&a, &b) - turnover(&b, &a)).abs() <= 1e-15);
        prop_assert!(turnover(&a, &c) <= turnover(&a, &b) + turnover(&b, &c) + 1e-12);
        let t = turnover(&a, &b);
        prop_assert!((0.0..=1.0).contains(&t));
        if a != b { prop_assert!(t > 0.0); }
    }

    #[test]
    fn violation_detector_matches_brute_force(
        pairs in prop::collection::vec((0u8..8, 0u8..8), 2..40),
    ) {
        let ids: Vec<String> = (0..pairs.len()).map(|i| format!("S{i}")).collect();
        let mu_raw: Vec<f64> = pairs.iter().map(|p| p.0 as f64 + 1.0).collect();
        let eta_raw: Vec<f64> = pairs.iter().map(|p| p.1 as f64 + 1.0).collect();
        let mu = WeightVector::from_raw(ids.clone(), &mu_raw).unwrap();
        let eta = WeightVector::from_raw(ids, &eta_raw).unwrap();
        let found = find_order_violations(&mu, &eta).unwrap();
        prop_assert_eq!(found.len(), brute_force_violations(mu.weights(), eta.weights()));
        for v in &found {
            prop_assert!(v.mu_low < v.mu_high && v.eta_low > v.eta_high);
        }
    }

    #[test]
    fn solver_meets_bound_and_is_maximal(mu in positive_vector(100), frac in 0.05..0.95f64, k in 1usize..8) {
        let stat = if k == 1 { Statistic::MaxWeight } else { Statistic::TopKSum { k: k.min(mu.len()) } };
        let at = |p: f64| {
            let eta = power_rebalance(&mu, PowerRule::new(p).unwrap()).unwrap();
            reweight::concentration_statistic(&eta, stat).unwrap()
        };
        let (lo, hi) = (at(0.0), at(1.0));
        let bound = lo + frac * (hi - lo);
        prop_assume!(bound > 0.0 && bound < 1.0 && hi - lo > 1e-6);
        let target = CalibrationTarget::new(stat, bound).unwrap();
        let r = solve_exponent(&mu, target, DEFAULT_TOL).unwrap();
        prop_assert!(r.converged);
        prop_assert!((0.0..=1.0).contains(&r.p_star));
        prop_assert!(at(r.p_star) <= bound + 1e-8);
        if r.p_star < 1.0 {
            prop_assert!(at((r.p_star + DEFAULT_TOL).min(1.0)) > bound - 1e-8);
        }

        let mut order: Vec<usize> = (0..mu.len()).collect();
        order.reverse();
        order.rotate_left(mu.len() / 3);
        let permuted = WeightVector::new(
            order.iter().map(|&i| mu.ids()[i].clone()).collect(),
            order.iter().map(|&i| mu.weights()[i]).collect(),
        ).unwrap();
        let r2 = solve_exponent(&permuted, target, DEFAULT_TOL).unwrap();
        prop_assert!((r.p_star - r2.p_star).abs() <= DEFAULT_TOL, "{} vs {}", r.p_star, r2.p_star);
    }

    #[test]
    fn json_report_round_trips(mu in weight_vector(100), p in 0.0..=1.0f64) {
        let rule = RebalanceRule::Power(PowerRule::new(p).unwrap());
        let eta = rule.apply(&mu).unwrap();
        let json = RebalanceReport::build(&rule, &mu, &eta, 0.5).unwrap().to_json().unwrap();
        let back = parse_weight_file(&json, WeightColumn::After).unwrap();
        prop_assert_eq!(back.ids(), eta.ids());
        for (a, b) in back.weights().iter().zip(eta.weights()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn top_k_ignores_identifier_ties() {
    assert_eq!(top_k_sum(&[0.25, 0.25, 0.25, 0.25], 2), 0.5);
}
