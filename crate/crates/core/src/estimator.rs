//! Point-probability estimation from prefix-conditional samples.
//!
//! `D(σ)` factors as `Π_j D^j_{σ<j}(σ[j])`. For each coordinate the estimator
//! keeps sampling the marginal until it has seen `σ[j]` exactly `k` times; the
//! trial count `x_j` is `NB(k, p_j)` and `k/x_j` estimates `p_j`. The product
//! of these ratios has relative variance at most `ε²/3` when `k = ⌈4n/ε²⌉`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::DistributionModel;
use crate::oracle::{SubcondOracle, Symbol};

/// Ceiling that absorbs floating-point noise from decimal inputs: values within
/// `1e-12` (relative) of an integer snap to it.
pub fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointEstimate {
    pub value: f64,
    /// `Σ_j ln(k/x_j)`; stays finite where `value` would underflow.
    pub log_value: f64,
    pub per_coordinate_trials: Vec<u64>,
    pub k: u64,
    pub queries: u64,
}

impl PointEstimate {
    fn from_trials(k: u64, trials: Vec<u64>) -> Self {
        let log_value = trials.iter().map(|&x| (k as f64 / x as f64).ln()).sum();
        let value = trials.iter().map(|&x| k as f64 / x as f64).product();
        let queries = trials.iter().sum();
        PointEstimate {
            value,
            log_value,
            per_coordinate_trials: trials,
            k,
            queries,
        }
    }
}

/// `k = ⌈4n/ε²⌉` for `ε ∈ (0, 1)`.
pub fn successes_for(n: usize, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "estimator accuracy must lie in (0, 1), got {eps}"
        )));
    }
    Ok(snapped_ceil(4.0 * n as f64 / (eps * eps)) as u64)
}

/// Number of `sample_next(prefix)` draws until `target` has appeared `k` times.
///
/// Without a `trial_cap` this only terminates if the target marginal is
/// positive or the oracle's budget runs out.
pub fn negative_binomial_count<O: SubcondOracle + ?Sized>(
    oracle: &mut O,
    prefix: &[Symbol],
    target: Symbol,
    k: u64,
    trial_cap: Option<u64>,
) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let domain = oracle.domain();
    domain.validate_prefix(prefix)?;
    if !domain.alphabet.contains(target) {
        return Err(Error::InvalidString(format!(
            "target symbol {target} outside alphabet"
        )));
    }
    let mut hits = 0;
    let mut trials = 0;
    while hits < k {
        if let Some(cap) = trial_cap {
            if trials >= cap {
                return Err(Error::TrialCapReached { cap });
            }
        }
        trials += 1;
        if oracle.sample_next(prefix)? == target {
            hits += 1;
        }
    }
    Ok(trials)
}

/// Estimate `D(σ)` with a fixed success count `k` per coordinate.
pub fn sub_to_eval_with_k<O: SubcondOracle + ?Sized>(
    oracle: &mut O,
    k: u64,
    sigma: &[Symbol],
    trial_cap: Option<u64>,
) -> Result<PointEstimate> {
    oracle.domain().validate_string(sigma)?;
    let trials = (0..sigma.len())
        .map(|j| negative_binomial_count(oracle, &sigma[..j], sigma[j], k, trial_cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointEstimate::from_trials(k, trials))
}

/// Estimate `D(σ)` to within `(1±ε)` with probability at least 2/3.
///
/// `ε` is accepted on `(0, 1)`; the accuracy guarantee needs `ε < 1/2`.
pub fn sub_to_eval<O: SubcondOracle + ?Sized>(
    oracle: &mut O,
    eps: f64,
    sigma: &[Symbol],
) -> Result<PointEstimate> {
    let k = successes_for(oracle.domain().n, eps)?;
    sub_to_eval_with_k(oracle, k, sigma, None)
}

/// `E[queries] = k · Σ_j 1/D^j_{σ<j}(σ[j])` with `k = ⌈4n/ε²⌉`.
pub fn expected_queries(model: &dyn DistributionModel, sigma: &[Symbol], eps: f64) -> Result<f64> {
    let domain = model.domain();
    domain.validate_string(sigma)?;
    let k = successes_for(domain.n, eps)?;
    expected_queries_with_k(model, sigma, k)
}

pub fn expected_queries_with_k(
    model: &dyn DistributionModel,
    sigma: &[Symbol],
    k: u64,
) -> Result<f64> {
    model.domain().validate_string(sigma)?;
    let mut inverse_sum = 0.0;
    for j in 0..sigma.len() {
        let p = model.conditional(&sigma[..j], sigma[j]);
        if p <= 0.0 {
            return Err(Error::InfiniteExpectation { coordinate: j });
        }
        inverse_sum += 1.0 / p;
    }
    Ok(k as f64 * inverse_sum)
}

/// Index of the median under the lower-middle convention.
fn lower_middle(len: usize) -> usize {
    (len - 1) / 2
}

/// Median of the estimates; even lengths return the lower-middle element.
pub fn median_amplify(estimates: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidParameter(
            "median of an empty sequence".into(),
        ));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[lower_middle(sorted.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ExplicitDistribution, ProductDistribution};
    use crate::oracle::{Domain, SimulatedOracle};
    use crate::seeding::{rng_from_seed, trial_seed};
    use proptest::prelude::*;

    fn cube(n: usize) -> Domain {
        Domain::hypercube(n).unwrap()
    }

    #[test]
    fn k_is_the_ceiling() {
        assert_eq!(successes_for(4, 0.5).unwrap(), 64);
        assert_eq!(successes_for(2, 0.4).unwrap(), 50);
        // 8 / 0.2025 = 39.506...
        assert_eq!(successes_for(2, 0.45).unwrap(), 40);
        assert_eq!(successes_for(3, 0.5).unwrap(), 48);
        assert!(successes_for(2, 0.0).is_err());
        assert!(successes_for(2, 1.0).is_err());
        assert!(successes_for(2, f64::NAN).is_err());
    }

    #[test]
    fn deterministic_marginal_needs_exactly_k() {
        let pm = ExplicitDistribution::point_mass(cube(2), &[1, 0]).unwrap();
        let mut o = SimulatedOracle::new(&pm, rng_from_seed(1));
        assert_eq!(
            negative_binomial_count(&mut o, &[], 1, 10, None).unwrap(),
            10
        );
        assert_eq!(o.queries(), 10);
    }

    #[test]
    fn nb_sample_mean_matches_k_over_p() {
        let u = ExplicitDistribution::uniform(cube(1)).unwrap();
        let runs = 1_000;
        let total: u64 = (0..runs)
            .map(|i| {
                let mut o = SimulatedOracle::new(&u, rng_from_seed(trial_seed(2, i)));
                negative_binomial_count(&mut o, &[], 0, 64, None).unwrap()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 128.0).abs() <= 5.0, "mean {mean}");
    }

    #[test]
    fn zero_marginal_hits_trial_cap() {
        let pm = ExplicitDistribution::point_mass(cube(1), &[0]).unwrap();
        let mut o = SimulatedOracle::new(&pm, rng_from_seed(3));
        let err = negative_binomial_count(&mut o, &[], 1, 4, Some(1000)).unwrap_err();
        assert!(matches!(err, Error::TrialCapReached { cap: 1000 }));
        assert_eq!(o.queries(), 1000);
    }

    #[test]
    fn zero_marginal_stops_at_budget() {
        let pm = ExplicitDistribution::point_mass(cube(1), &[0]).unwrap();
        let mut o = SimulatedOracle::with_budget(&pm, rng_from_seed(4), 500);
        assert!(negative_binomial_count(&mut o, &[], 1, 4, None)
            .unwrap_err()
            .is_budget_exhausted());
    }

    #[test]
    fn point_mass_estimate_is_exact() {
        let pm = ExplicitDistribution::point_mass(cube(2), &[0, 1]).unwrap();
        let mut o = SimulatedOracle::new(&pm, rng_from_seed(5));
        let est = sub_to_eval(&mut o, 0.4, &[0, 1]).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.log_value, 0.0);
        assert_eq!(est.queries, 2 * est.k);
        assert_eq!(est.k, 50);
    }

    #[test]
    fn estimate_invariants_and_meter_delta() {
        let d = ExplicitDistribution::new(cube(2), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut o = SimulatedOracle::new(&d, rng_from_seed(6));
        o.sample_next(&[]).unwrap();
        for _ in 0..50 {
            let before = o.queries();
            let est = sub_to_eval(&mut o, 0.45, &[1, 1]).unwrap();
            assert_eq!(o.queries() - before, est.queries);
            assert_eq!(est.queries, est.per_coordinate_trials.iter().sum::<u64>());
            assert!(est.per_coordinate_trials.iter().all(|&x| x >= est.k));
            let product: f64 = est
                .per_coordinate_trials
                .iter()
                .map(|&x| est.k as f64 / x as f64)
                .product();
            assert!((est.value - product).abs() <= 1e-12 * product);
            assert!((est.log_value.exp() - est.value).abs() <= 1e-12 * est.value);
        }
    }

    fn success_fraction(
        model: &ExplicitDistribution,
        sigma: &[Symbol],
        eps: f64,
        seed: u64,
    ) -> f64 {
        let truth = model.point_probability(sigma).unwrap();
        let runs = 500;
        let good = (0..runs)
            .filter(|&i| {
                let mut o = SimulatedOracle::new(model, rng_from_seed(trial_seed(seed, i)));
                let v = sub_to_eval(&mut o, eps, sigma).unwrap().value;
                (v - truth).abs() <= eps * truth
            })
            .count();
        good as f64 / runs as f64
    }

    #[test]
    fn uniform_success_rate() {
        let u = ExplicitDistribution::uniform(cube(2)).unwrap();
        let f = success_fraction(&u, &[0, 1], 0.45, 7);
        assert!(f >= 0.60, "success fraction {f}");
    }

    #[test]
    fn table_success_rate() {
        let d = ExplicitDistribution::new(cube(2), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let f = success_fraction(&d, &[1, 1], 0.4, 8);
        assert!(f >= 0.60, "success fraction {f}");
    }

    #[test]
    fn expected_query_formula() {
        let u = ExplicitDistribution::uniform(cube(4)).unwrap();
        assert_eq!(expected_queries(&u, &[0, 1, 1, 0], 0.5).unwrap(), 512.0);
        let pm = ExplicitDistribution::point_mass(cube(3), &[1, 1, 1]).unwrap();
        assert_eq!(expected_queries(&pm, &[1, 1, 1], 0.5).unwrap(), 3.0 * 48.0);
        assert!(matches!(
            expected_queries(&pm, &[0, 1, 1], 0.5),
            Err(Error::InfiniteExpectation { coordinate: 0 })
        ));
        let p = ProductDistribution::iid(cube(3), vec![0.2, 0.8]).unwrap();
        let e = expected_queries(&p, &[0, 0, 0], 0.5).unwrap();
        assert!((e - 720.0).abs() < 1e-9, "{e}");
    }

    #[test]
    fn skewed_product_mean_queries() {
        let p = ProductDistribution::iid(cube(3), vec![0.2, 0.8]).unwrap();
        let runs = 1_000;
        let total: u64 = (0..runs)
            .map(|i| {
                let mut o = SimulatedOracle::new(&p, rng_from_seed(trial_seed(9, i)));
                sub_to_eval(&mut o, 0.5, &[0, 0, 0]).unwrap().queries
            })
            .sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 720.0).abs() <= 0.05 * 720.0, "mean {mean}");
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_amplify(&[3.0]).unwrap(), 3.0);
        assert_eq!(median_amplify(&[1.0, 2.0, 100.0]).unwrap(), 2.0);
        assert_eq!(median_amplify(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.0);
        assert_eq!(median_amplify(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert!(median_amplify(&[]).is_err());
    }

    proptest! {
        #[test]
        fn median_is_an_observed_order_statistic(v in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let m = median_amplify(&v).unwrap();
            prop_assert!(v.contains(&m));
            let below = v.iter().filter(|&&x| x < m).count();
            let at_or_below = v.iter().filter(|&&x| x <= m).count();
            let idx = (v.len() - 1) / 2;
            prop_assert!(below <= idx && idx < at_or_below);
        }
    }
}
