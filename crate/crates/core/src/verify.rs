//! Statistical checks with explicit confidence margins.
//!
//! Each check runs independent seeded trials (in parallel), summarizes them and
//! applies a margin that favours passing, so a true claim fails spuriously with
//! probability at most the configured level.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimator::{expected_queries, negative_binomial_count, sub_to_eval};
use crate::models::{
    exact_tv, marginal_extremes, random_model, DistributionModel, ExplicitDistribution, ModelKind,
    ProductDistribution,
};
use crate::oracle::{Alphabet, Domain, SimulatedOracle, Symbol};
use crate::seeding::{rng_from_seed, trial_seed};
use crate::taming::{tame_exact, TameMode, Taming};
use crate::tester::{
    distance_accuracy, distance_estimate, distance_samples, simulate_run, TesterConfig, Verdict,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatCheck {
    pub name: String,
    pub trials: u64,
    pub observed: f64,
    pub claimed: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Two-sided Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn run_trials<T: Send, F: Fn(u64) -> T + Sync>(trials: u64, trial_fn: F) -> Vec<T> {
    (0..trials).into_par_iter().map(|i| trial_fn(i)).collect()
}

/// Passes unless the Wilson interval lies entirely below `p_claimed`.
pub fn check_success_rate<F>(
    name: &str,
    trial_fn: F,
    p_claimed: f64,
    trials: u64,
    confidence: f64,
) -> Result<StatCheck>
where
    F: Fn(u64) -> bool + Sync,
{
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "success-rate checks need at least 100 trials, got {trials}"
        )));
    }
    let successes = run_trials(trials, trial_fn)
        .into_iter()
        .filter(|&ok| ok)
        .count() as u64;
    let (_, upper) = wilson_interval(successes, trials, confidence);
    let observed = successes as f64 / trials as f64;
    Ok(StatCheck {
        name: name.to_string(),
        trials,
        observed,
        claimed: p_claimed,
        margin: upper - observed,
        pass: upper >= p_claimed,
    })
}

/// Passes if `|mean − claim| ≤ rel_tol·claim + 3·SE`.
pub fn check_mean<F>(
    name: &str,
    trial_fn: F,
    mean_claimed: f64,
    rel_tol: f64,
    trials: u64,
) -> Result<StatCheck>
where
    F: Fn(u64) -> f64 + Sync,
{
    if trials < 2 {
        return Err(Error::InvalidParameter(
            "mean checks need at least 2 trials".into(),
        ));
    }
    let values = run_trials(trials, trial_fn);
    let (mean, se) = mean_and_standard_error(&values);
    let margin = rel_tol * mean_claimed.abs() + 3.0 * se;
    Ok(StatCheck {
        name: name.to_string(),
        trials,
        observed: mean,
        claimed: mean_claimed,
        margin,
        pass: (mean - mean_claimed).abs() <= margin,
    })
}

/// Passes if the observed fraction of successes is at least `threshold`.
pub fn check_rate_at_least<F>(name: &str, trial_fn: F, threshold: f64, trials: u64) -> StatCheck
where
    F: Fn(u64) -> bool + Sync,
{
    let successes = run_trials(trials, trial_fn)
        .into_iter()
        .filter(|&ok| ok)
        .count();
    let observed = successes as f64 / trials as f64;
    StatCheck {
        name: name.to_string(),
        trials,
        observed,
        claimed: threshold,
        margin: 0.0,
        pass: observed >= threshold,
    }
}

pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance and its standard error `sqrt((μ4 − s⁴)/N)`.
pub fn variance_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (var, ((m4 - var * var).max(0.0) / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit; cells with expected count below 5 are pooled.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probabilities.len() || observed.is_empty() {
        return Err(Error::InvalidParameter(
            "observed/expected length mismatch".into(),
        ));
    }
    if observed
        .iter()
        .zip(probabilities)
        .any(|(&o, &p)| o > 0 && p <= 0.0)
    {
        // Observations in a cell of zero probability refute the model outright.
        return Ok(ChiSquareResult {
            statistic: f64::INFINITY,
            dof: observed.len() - 1,
            p_value: 0.0,
        });
    }
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = p * total;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return Ok(ChiSquareResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scorecard {
    pub seed: u64,
    pub checks: Vec<StatCheck>,
    pub all_pass: bool,
}

fn cube(n: usize) -> Domain {
    Domain::hypercube(n).expect("positive dimension")
}

/// A named model with a string σ and an accuracy ε.
pub type EstimatorFixture = (String, Box<dyn DistributionModel>, Vec<Symbol>, f64);

/// Point-estimator fixtures. Every marginal along σ is ≥ 0.1.
pub fn estimator_fixtures() -> Vec<EstimatorFixture> {
    let table = ExplicitDistribution::new(cube(2), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let grid = Domain::new(2, Alphabet::new(3).unwrap()).unwrap();
    vec![
        (
            "explicit_table_n2".into(),
            Box::new(table) as Box<dyn DistributionModel>,
            vec![1, 1],
            0.4,
        ),
        (
            "uniform_n2".into(),
            Box::new(ExplicitDistribution::uniform(cube(2)).unwrap()),
            vec![0, 1],
            0.45,
        ),
        (
            "product_n3".into(),
            Box::new(
                ProductDistribution::new(
                    cube(3),
                    vec![vec![0.3, 0.7], vec![0.6, 0.4], vec![0.2, 0.8]],
                )
                .unwrap(),
            ),
            vec![0, 1, 1],
            0.4,
        ),
        (
            "chain_n4".into(),
            Box::new(
                crate::models::ChainDistribution::new(
                    cube(4),
                    vec![0.4, 0.6],
                    vec![
                        vec![vec![0.7, 0.3], vec![0.25, 0.75]],
                        vec![vec![0.5, 0.5], vec![0.1, 0.9]],
                        vec![vec![0.8, 0.2], vec![0.35, 0.65]],
                    ],
                )
                .unwrap(),
            ),
            vec![1, 0, 1, 0],
            0.45,
        ),
        (
            "product_grid_n2".into(),
            Box::new(
                ProductDistribution::new(grid, vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.25, 0.15]])
                    .unwrap(),
            ),
            vec![2, 1],
            0.4,
        ),
    ]
}

/// Fraction of `(1±ε)`-accurate point estimates wins over 2/3 (99% Wilson).
pub fn point_estimate_checks(seed: u64, trials: u64) -> Result<Vec<StatCheck>> {
    estimator_fixtures()
        .into_iter()
        .enumerate()
        .map(|(idx, (name, model, sigma, eps))| {
            let truth = model.point_probability(&sigma)?;
            check_success_rate(
                &format!("point_estimate_success/{name}"),
                |i| {
                    let mut o = SimulatedOracle::new(
                        model.as_ref(),
                        rng_from_seed(trial_seed(seed ^ idx as u64, i)),
                    );
                    let v = sub_to_eval(&mut o, eps, &sigma)
                        .expect("positive marginals")
                        .value;
                    (v - truth).abs() <= eps * truth
                },
                2.0 / 3.0,
                trials,
                0.99,
            )
        })
        .collect()
}

/// Run the named validation suite behind the `verify` subcommand.
pub fn run_suite(seed: u64) -> Result<Scorecard> {
    let mut checks = point_estimate_checks(seed, 500)?;

    let uniform4 = ExplicitDistribution::uniform(cube(4))?;
    checks.push(check_mean(
        "expected_queries/uniform_n4_eps0.5",
        |i| {
            let mut rng = rng_from_seed(trial_seed(seed ^ 0x10, i));
            let sigma = uniform4.sample_exact(&mut rng);
            let mut o = SimulatedOracle::new(&uniform4, rng);
            sub_to_eval(&mut o, 0.5, &sigma)
                .expect("uniform marginals")
                .queries as f64
        },
        512.0,
        0.05,
        1000,
    )?);
    for (name, model, sigma, eps) in estimator_fixtures() {
        let claim = expected_queries(model.as_ref(), &sigma, eps)?;
        checks.push(check_mean(
            &format!("expected_queries/{name}"),
            |i| {
                let mut o =
                    SimulatedOracle::new(model.as_ref(), rng_from_seed(trial_seed(seed ^ 0x11, i)));
                sub_to_eval(&mut o, eps, &sigma)
                    .expect("positive marginals")
                    .queries as f64
            },
            claim,
            0.05,
            1000,
        )?);
    }

    for (k, p) in [(64u64, 0.5f64), (32, 0.25)] {
        let model = ProductDistribution::new(cube(1), vec![vec![p, 1.0 - p]])?;
        checks.push(check_mean(
            &format!("negative_binomial_mean/k{k}_p{p}"),
            |i| {
                let mut o = SimulatedOracle::new(&model, rng_from_seed(trial_seed(seed ^ 0x20, i)));
                negative_binomial_count(&mut o, &[], 0, k, None).expect("positive marginal") as f64
            },
            k as f64 / p,
            0.0,
            10_000,
        )?);
    }

    checks.push(taming_bound_check(seed)?);

    let u2 = ExplicitDistribution::uniform(cube(2))?;
    let atom = ExplicitDistribution::point_mass(cube(2), &[0, 0])?;
    let tv = exact_tv(&u2, &atom)?;
    let theta = distance_accuracy(0.05, 0.05);
    let m = distance_samples(theta, 0.1) as usize;
    checks.push(check_success_rate(
        "distance_estimate/noisy_evaluators",
        |i| {
            let mut rng = rng_from_seed(trial_seed(seed ^ 0x30, i));
            let mut p_noise = rng_from_seed(trial_seed(seed ^ 0x31, i));
            let mut q_noise = rng_from_seed(trial_seed(seed ^ 0x32, i));
            let est = distance_estimate(
                m,
                || Ok(atom.sample_exact(&mut rng)),
                |s| Ok(u2.point_probability(s)? * multiplicative_noise(&mut p_noise, 0.05)),
                |s| Ok(atom.point_probability(s)? * multiplicative_noise(&mut q_noise, 0.05)),
            )
            .expect("positive evaluators");
            (est.z - tv).abs() <= theta
        },
        0.9,
        100,
        0.99,
    )?);

    let cfg = TesterConfig::engineering();
    let u3 = ExplicitDistribution::uniform(cube(3))?;
    let atom3 = ExplicitDistribution::point_mass(cube(3), &[0, 0, 0])?;
    checks.push(check_rate_at_least(
        "end_to_end/accept_equal_uniform_n3",
        |i| {
            simulate_run(&u3, &u3, 0.2, 0.8, &cfg, trial_seed(seed ^ 0x40, i))
                .map(|r| r.verdict == Verdict::Accept)
                .unwrap_or(false)
        },
        0.6,
        20,
    ));
    checks.push(check_rate_at_least(
        "end_to_end/reject_uniform_vs_atom_n3",
        |i| {
            simulate_run(&u3, &atom3, 0.1, 0.6, &cfg, trial_seed(seed ^ 0x41, i))
                .map(|r| r.verdict == Verdict::Reject)
                .unwrap_or(false)
        },
        0.6,
        20,
    ));

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(Scorecard {
        seed,
        checks,
        all_pass,
    })
}

/// A factor drawn uniformly from `[1−θ, 1+θ]`.
pub fn multiplicative_noise(rng: &mut impl rand::Rng, theta: f64) -> f64 {
    1.0 + rng.random_range(-theta..=theta)
}

/// `d_TV(D, tame(D)) ≤ θn` and the marginal floor over random explicit models.
pub fn taming_bound_check(seed: u64) -> Result<StatCheck> {
    let mut cases = 0u64;
    let mut worst_slack = f64::INFINITY;
    let mut pass = true;
    let mut rng = rng_from_seed(seed ^ 0x50);
    for (alphabet, mode) in [(2u64, TameMode::Hypercube), (3, TameMode::Hypergrid)] {
        let alphabet = Alphabet::new(alphabet)?;
        for n in 1..=6usize {
            let domain = Domain::new(n, alphabet)?;
            let model = random_model(ModelKind::Explicit, domain, &mut rng)?;
            for theta in [0.01, 0.05, 0.1] {
                let tamed = tame_exact(&model, theta, mode)?;
                let slack = theta * n as f64 - exact_tv(&model, &tamed)?;
                let (lo, hi) = marginal_extremes(&tamed)?;
                let (floor, ceiling) = Taming::new(theta, mode, alphabet)?.marginal_bounds();
                pass &= slack >= -1e-9 && lo >= floor - 1e-12 && hi <= ceiling + 1e-12;
                worst_slack = worst_slack.min(slack);
                cases += 1;
            }
        }
    }
    Ok(StatCheck {
        name: "taming_tv_bound".into(),
        trials: cases,
        observed: worst_slack,
        claimed: 0.0,
        margin: 1e-9,
        pass,
    })
}
