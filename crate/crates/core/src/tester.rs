//! Tolerant closeness testing of two distributions given prefix-conditional
//! sampling access to both.
//!
//! The tester tames `P` into `P'`, draws `m` strings `σ_i ∼ Q`, estimates
//! `P'(σ_i)` and `Q(σ_i)` as medians of `t` point estimates each, and averages
//! `Γ[i] = max(0, 1 − p_i/q_i)`. The average `Z` approximates `d_TV(P', Q)`;
//! the run accepts iff `Z ≤ (ε1+ε2)/2`. Every query of the run, including the
//! draws from `Q`, counts against a shared budget `M`; exhausting it rejects.

use num::{BigInt, BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{median_amplify, snapped_ceil, sub_to_eval_with_k};
use crate::models::DistributionModel;
use crate::oracle::{
    Alphabet, Metered, QueryMeter, SharedMeter, SimulatedOracle, SubcondOracle, Symbol,
};
use crate::seeding::{stream, stream_rng};
use crate::taming::{TameMode, TamedOracle};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    /// Constants exactly as derived in the correctness proof.
    Paper,
    /// `m`, `t` and `k` scaled down by the given multipliers in `(0, 1]`.
    Engineering {
        m_scale: f64,
        t_scale: f64,
        k_scale: f64,
    },
}

impl Profile {
    pub const DEFAULT_M_SCALE: f64 = 0.1;
    pub const DEFAULT_T_SCALE: f64 = 0.05;
    pub const DEFAULT_K_SCALE: f64 = 0.01;

    pub fn engineering() -> Self {
        Profile::Engineering {
            m_scale: Self::DEFAULT_M_SCALE,
            t_scale: Self::DEFAULT_T_SCALE,
            k_scale: Self::DEFAULT_K_SCALE,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Profile::Engineering {
            m_scale,
            t_scale,
            k_scale,
        } = *self
        {
            for (name, v) in [
                ("m_scale", m_scale),
                ("t_scale", t_scale),
                ("k_scale", k_scale),
            ] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must lie in (0, 1], got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterConfig {
    pub profile: Profile,
    /// Replaces the default taming parameter `γ/(2n)` (or `γ/(2|Σ|n)`).
    #[serde(default)]
    pub theta_override: Option<f64>,
    /// Replaces the derived budget.
    #[serde(default)]
    pub budget_override: Option<u64>,
}

impl Default for TesterConfig {
    fn default() -> Self {
        TesterConfig {
            profile: Profile::Paper,
            theta_override: None,
            budget_override: None,
        }
    }
}

impl TesterConfig {
    pub fn engineering() -> Self {
        TesterConfig {
            profile: Profile::engineering(),
            theta_override: None,
            budget_override: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TesterParams {
    pub n: usize,
    pub alphabet_size: u32,
    pub eps1: f64,
    pub eps2: f64,
    pub gamma: f64,
    pub m: u64,
    pub t: u64,
    pub k: u64,
    pub eps_eval: f64,
    pub theta_tame: f64,
    pub mode: TameMode,
    /// `M`, the hypercube budget.
    pub budget_hypercube: u64,
    /// `M·|Σ|`.
    pub budget_grid: u64,
    /// The ceiling actually enforced: `M` on `{0,1}^n`, `M·|Σ|` otherwise.
    pub budget: u64,
    pub profile: Profile,
}

/// Sample count `⌈16 ln 20 / γ²⌉`.
pub fn paper_sample_count(gamma: f64) -> u64 {
    snapped_ceil(16.0 * 20f64.ln() / (gamma * gamma)) as u64
}

/// Median repetitions `⌈48 ln(10m)⌉`.
pub fn paper_repetitions(m: u64) -> u64 {
    snapped_ceil(48.0 * (10.0 * m as f64).ln()) as u64
}

/// The two budget terms `(2^10 n³ m t / γ³, 2^9 n² m t / γ²)` before the
/// factor 10, in floating point.
pub fn budget_terms(n: usize, m: u64, t: u64, gamma: f64) -> (f64, f64) {
    let n = n as f64;
    let mt = m as f64 * t as f64;
    (
        1024.0 * n.powi(3) * mt / gamma.powi(3),
        512.0 * n.powi(2) * mt / gamma.powi(2),
    )
}

/// The decimal value a float was written as: the shortest digit string that
/// round-trips, read as an exact fraction.
pub fn decimal_value(x: f64) -> BigRational {
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{whole}{frac}")
        .parse()
        .expect("finite floats print as decimals");
    let denom = num::pow(BigInt::from(10u8), frac.len());
    let value = BigRational::new(numer, denom);
    if negative {
        -value
    } else {
        value
    }
}

fn exact_ceil(x: &BigRational) -> u64 {
    x.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// `10·(2^10 n³ m t / γ³ + 2^9 n² m t / γ²)` as an exact fraction.
fn exact_budget(n: usize, m: u64, t: u64, gamma: &BigRational) -> BigRational {
    let n = BigRational::from_integer(BigInt::from(n));
    let mt = BigRational::from_integer(BigInt::from(m) * BigInt::from(t));
    let g2 = gamma * gamma;
    let g3 = &g2 * gamma;
    let dominant = BigRational::from_integer(BigInt::from(1024)) * &n * &n * &n * &mt / g3;
    let secondary = BigRational::from_integer(BigInt::from(512)) * &n * &n * &mt / g2;
    BigRational::from_integer(BigInt::from(10)) * (dominant + secondary)
}

/// `⌈10·(2^10 n³ m t / γ³ + 2^9 n² m t / γ²)⌉`, saturating at `u64::MAX`.
///
/// Evaluated exactly with `γ` read as the decimal it was written as; the result
/// outgrows the integer precision of `f64` at desk-scale inputs.
pub fn paper_budget(n: usize, m: u64, t: u64, gamma: f64) -> u64 {
    exact_ceil(&exact_budget(n, m, t, &decimal_value(gamma)))
}

/// Derive every constant of a run. `m` and `t` are computed before `M`, which
/// depends on both.
pub fn derive_params(
    n: usize,
    alphabet: Alphabet,
    eps1: f64,
    eps2: f64,
    config: &TesterConfig,
) -> Result<TesterParams> {
    if n == 0 {
        return Err(Error::InvalidDimension);
    }
    if !(eps1 >= 0.0 && eps1 < eps2 && eps2 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 ≤ ε1 < ε2 ≤ 1, got ε1={eps1}, ε2={eps2}"
        )));
    }
    config.profile.validate()?;
    let gamma = (eps2 - eps1) / 2.0;
    // The decimal gap: `(ε2−ε1)/2` in floating point may sit just off it.
    let gamma_exact = (decimal_value(eps2) - decimal_value(eps1)) / BigInt::from(2);
    let eps_eval = gamma / 8.0;
    let m_paper = paper_sample_count(gamma);
    let t_paper = paper_repetitions(m_paper);
    // `⌈4n/(γ/8)²⌉ = ⌈256n/γ²⌉`.
    let k_paper = exact_ceil(
        &(BigRational::from_integer(BigInt::from(256 * n)) / (&gamma_exact * &gamma_exact)),
    );

    let (m, t, k) = match config.profile {
        Profile::Paper => (m_paper, t_paper, k_paper),
        Profile::Engineering {
            m_scale,
            t_scale,
            k_scale,
        } => {
            let scale = |v: u64, s: f64| (snapped_ceil(v as f64 * s) as u64).max(1);
            (
                scale(m_paper, m_scale),
                scale(t_paper, t_scale),
                scale(k_paper, k_scale),
            )
        }
    };
    // The budget formula assumes the unscaled k; scaled runs shrink it in proportion.
    let k_ratio = BigRational::new(BigInt::from(k), BigInt::from(k_paper));
    let budget_hypercube = exact_ceil(&(exact_budget(n, m, t, &gamma_exact) * k_ratio));
    let size = alphabet.size() as u64;
    let budget_grid = budget_hypercube.saturating_mul(size);
    let mode = TameMode::for_alphabet(alphabet);
    let (theta_default, budget) = match mode {
        TameMode::Hypercube => (gamma / (2.0 * n as f64), budget_hypercube),
        TameMode::Hypergrid => (gamma / (2.0 * size as f64 * n as f64), budget_grid),
    };
    Ok(TesterParams {
        n,
        alphabet_size: alphabet.size(),
        eps1,
        eps2,
        gamma,
        m,
        t,
        k,
        eps_eval,
        theta_tame: config.theta_override.unwrap_or(theta_default),
        mode,
        budget_hypercube,
        budget_grid,
        budget: config.budget_override.unwrap_or(budget),
        profile: config.profile,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub verdict: Verdict,
    pub z: f64,
    pub threshold: f64,
    pub gamma_entries: Vec<f64>,
    pub queries_p: u64,
    pub queries_q: u64,
    pub budget_exceeded: bool,
    pub params: TesterParams,
    pub seed: u64,
}

impl RunReport {
    pub fn total_queries(&self) -> u64 {
        self.queries_p + self.queries_q
    }
}

/// `max(0, 1 − p/q)` from log-domain estimates.
fn gamma_from_logs(ln_p: f64, ln_q: f64) -> f64 {
    if ln_q > ln_p {
        // Keep Γ < 1 when p/q underflows; p is strictly positive here.
        (-(ln_p - ln_q).exp_m1()).min(1.0 - f64::EPSILON / 2.0)
    } else {
        0.0
    }
}

/// Run the tester against two oracles over the same domain.
///
/// `seed` drives the taming coin; the oracles carry their own generators.
pub fn sub_vs_sub<P: SubcondOracle, Q: SubcondOracle>(
    p: P,
    q: Q,
    eps1: f64,
    eps2: f64,
    config: &TesterConfig,
    seed: u64,
) -> Result<RunReport> {
    let domain = p.domain();
    domain.ensure_same(&q.domain())?;
    let params = derive_params(domain.n, domain.alphabet, eps1, eps2, config)?;

    let meter = SharedMeter::new(QueryMeter::with_budget(params.budget));
    let mut p_tamed = TamedOracle::new(
        Metered::new(p, meter.clone()),
        params.theta_tame,
        params.mode,
        stream_rng(seed, stream::TAMING),
    )?;
    let mut q = Metered::new(q, meter.clone());

    let mut gamma_entries = vec![0.0; params.m as usize];
    let budget_exceeded =
        match fill_gamma_entries(&mut p_tamed, &mut q, &params, &mut gamma_entries) {
            Ok(()) => false,
            Err(e) if e.is_budget_exhausted() => true,
            Err(e) => return Err(e),
        };

    let z = gamma_entries.iter().sum::<f64>() / params.m as f64;
    let threshold = (eps1 + eps2) / 2.0;
    let verdict = if budget_exceeded || z > threshold {
        Verdict::Reject
    } else {
        Verdict::Accept
    };
    Ok(RunReport {
        verdict,
        z,
        threshold,
        gamma_entries,
        queries_p: p_tamed.inner().queries(),
        queries_q: q.queries(),
        budget_exceeded,
        params,
        seed,
    })
}

fn fill_gamma_entries<P: SubcondOracle, Q: SubcondOracle>(
    p: &mut P,
    q: &mut Q,
    params: &TesterParams,
    gamma_entries: &mut [f64],
) -> Result<()> {
    let t = params.t as usize;
    let mut p_logs = Vec::with_capacity(t);
    let mut q_logs = Vec::with_capacity(t);
    for entry in gamma_entries.iter_mut() {
        let sigma = q.sample_full(&[])?;
        p_logs.clear();
        q_logs.clear();
        for _ in 0..t {
            p_logs.push(sub_to_eval_with_k(p, params.k, &sigma, None)?.log_value);
            q_logs.push(sub_to_eval_with_k(q, params.k, &sigma, None)?.log_value);
        }
        let p_i = median_amplify(&p_logs)?;
        let q_i = median_amplify(&q_logs)?;
        *entry = gamma_from_logs(p_i, q_i);
    }
    Ok(())
}

/// Run the tester against simulated oracles for two known models.
pub fn simulate_run(
    p: &dyn DistributionModel,
    q: &dyn DistributionModel,
    eps1: f64,
    eps2: f64,
    config: &TesterConfig,
    seed: u64,
) -> Result<RunReport> {
    let p_oracle = SimulatedOracle::new(p, stream_rng(seed, stream::P_ORACLE));
    let q_oracle = SimulatedOracle::new(q, stream_rng(seed, stream::Q_ORACLE));
    sub_vs_sub(p_oracle, q_oracle, eps1, eps2, config, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub z: f64,
    pub gamma_entries: Vec<f64>,
}

/// Accuracy `2(θ1+θ2)/(1−θ2)` reachable with `(1±θ1)` and `(1±θ2)` evaluators.
pub fn distance_accuracy(theta1: f64, theta2: f64) -> f64 {
    2.0 * (theta1 + theta2) / (1.0 - theta2)
}

/// Draws `⌈4 ln(2/δ)/θ²⌉` sufficient for accuracy `θ` with confidence `1−δ`.
pub fn distance_samples(theta: f64, delta: f64) -> u64 {
    snapped_ceil(4.0 * (2.0 / delta).ln() / (theta * theta)) as u64
}

/// Mean of `max(0, 1 − p_σ/q_σ)` over `m` draws `σ ∼ Q`.
pub fn distance_estimate<S, PE, QE>(
    m: usize,
    mut sample_q: S,
    mut eval_p: PE,
    mut eval_q: QE,
) -> Result<DistanceEstimate>
where
    S: FnMut() -> Result<Vec<Symbol>>,
    PE: FnMut(&[Symbol]) -> Result<f64>,
    QE: FnMut(&[Symbol]) -> Result<f64>,
{
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let mut gamma_entries = Vec::with_capacity(m);
    for _ in 0..m {
        let sigma = sample_q()?;
        let p = eval_p(&sigma)?;
        let q = eval_q(&sigma)?;
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::EvaluatorFailure(format!("Q-evaluator returned {q}")));
        }
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::EvaluatorFailure(format!("P-evaluator returned {p}")));
        }
        gamma_entries.push(if q > p { 1.0 - p / q } else { 0.0 });
    }
    let z = gamma_entries.iter().sum::<f64>() / m as f64;
    Ok(DistanceEstimate { z, gamma_entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{exact_tv, ExplicitDistribution};
    use crate::oracle::Domain;
    use crate::seeding::{rng_from_seed, trial_seed};
    use crate::taming::tame_exact;
    use rand::Rng;

    fn cube(n: usize) -> Domain {
        Domain::hypercube(n).unwrap()
    }

    #[test]
    fn derive_examples() {
        let cfg = TesterConfig::default();
        let p = derive_params(4, Alphabet::BINARY, 0.0, 1.0, &cfg).unwrap();
        assert_eq!((p.gamma, p.m, p.k), (0.5, 192, 4096));
        assert_eq!(p.eps_eval, 0.0625);
        let p = derive_params(2, Alphabet::BINARY, 0.1, 0.5, &cfg).unwrap();
        assert!((p.gamma - 0.2).abs() < 1e-15);
        assert!(derive_params(2, Alphabet::BINARY, 0.5, 0.5, &cfg).is_err());
        assert!(derive_params(2, Alphabet::BINARY, -0.1, 0.5, &cfg).is_err());
        assert!(derive_params(2, Alphabet::BINARY, 0.1, 1.5, &cfg).is_err());
    }

    #[test]
    fn budget_is_exact_past_float_precision() {
        // 10·(2^10·8·533·412/0.027 + 2^9·4·533·412/0.09) = 716240820148.148...
        assert_eq!(paper_budget(2, 533, 412, 0.3), 716_240_820_149);
        let p = derive_params(2, Alphabet::BINARY, 0.1, 0.7, &TesterConfig::default()).unwrap();
        assert_eq!((p.m, p.t, p.budget), (533, 412, 716_240_820_149));
        assert_eq!(decimal_value(0.1), BigRational::new(1.into(), 10.into()));
        assert_eq!(decimal_value(-2.5), BigRational::new((-5).into(), 2.into()));
    }

    #[test]
    fn hypergrid_params_scale_with_alphabet() {
        let cfg = TesterConfig::default();
        let a3 = Alphabet::new(3).unwrap();
        let p = derive_params(3, a3, 0.2, 0.8, &cfg).unwrap();
        assert_eq!(p.mode, TameMode::Hypergrid);
        assert_eq!(p.budget, p.budget_hypercube * 3);
        assert!((p.theta_tame - 0.3 / 18.0).abs() < 1e-15);
        let cube = derive_params(3, Alphabet::BINARY, 0.2, 0.8, &cfg).unwrap();
        assert_eq!(cube.budget, cube.budget_hypercube);
        assert!((cube.theta_tame - 0.05).abs() < 1e-15);
    }

    #[test]
    fn engineering_profile_scales() {
        let p = derive_params(3, Alphabet::BINARY, 0.2, 0.8, &TesterConfig::engineering()).unwrap();
        assert_eq!((p.m, p.t, p.k), (54, 21, 86));
        let bad = TesterConfig {
            profile: Profile::Engineering {
                m_scale: 0.0,
                t_scale: 1.0,
                k_scale: 1.0,
            },
            theta_override: None,
            budget_override: None,
        };
        assert!(derive_params(3, Alphabet::BINARY, 0.2, 0.8, &bad).is_err());
    }

    #[test]
    fn budget_dominant_term_scales_as_gamma_cubed() {
        let (a, _) = budget_terms(4, 100, 50, 0.2);
        let (b, _) = budget_terms(4, 100, 50, 0.1);
        assert!((b / a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_entry_bounds() {
        assert_eq!(gamma_from_logs(0.0, 0.0), 0.0);
        assert_eq!(gamma_from_logs(-1.0, -2.0), 0.0);
        assert!((gamma_from_logs(0.25f64.ln(), 0.0) - 0.75).abs() < 1e-15);
        assert!(gamma_from_logs(-800.0, 0.0) < 1.0);
    }

    #[test]
    fn exact_evaluators_on_equal_distributions_give_zero() {
        let u = ExplicitDistribution::uniform(cube(3)).unwrap();
        let mut rng = rng_from_seed(1);
        let est = distance_estimate(
            500,
            || Ok(u.sample_exact(&mut rng)),
            |s| u.point_probability(s),
            |s| u.point_probability(s),
        )
        .unwrap();
        assert_eq!(est.z, 0.0);
    }

    #[test]
    fn exact_evaluators_recover_tv() {
        // Q uniform, P a point mass: Γ is 1 off the atom and 0 on it.
        let u = ExplicitDistribution::uniform(cube(2)).unwrap();
        let pm = ExplicitDistribution::point_mass(cube(2), &[0, 0]).unwrap();
        let mut rng = rng_from_seed(2);
        let est = distance_estimate(
            4000,
            || Ok(u.sample_exact(&mut rng)),
            |s| pm.point_probability(s),
            |s| u.point_probability(s),
        )
        .unwrap();
        assert!((est.z - 0.75).abs() <= 0.03, "z {}", est.z);
    }

    #[test]
    fn zero_q_evaluator_is_a_failure() {
        let err = distance_estimate(3, || Ok(vec![0, 0]), |_| Ok(0.5), |_| Ok(0.0)).unwrap_err();
        assert!(matches!(err, Error::EvaluatorFailure(_)));
    }

    #[test]
    fn sandwich_against_tamed_ground_truth() {
        // Exact evaluators for P' and Q at the unscaled m; |Z − d_TV(P', Q)| ≤ γ/2.
        let mut rng = rng_from_seed(3);
        let domain = cube(3);
        let p = crate::models::random_model(crate::models::ModelKind::Explicit, domain, &mut rng)
            .unwrap();
        let q =
            crate::models::random_model(crate::models::ModelKind::Chain, domain, &mut rng).unwrap();
        let params =
            derive_params(3, Alphabet::BINARY, 0.1, 0.5, &TesterConfig::default()).unwrap();
        let tamed = tame_exact(&p, params.theta_tame, params.mode).unwrap();
        let truth = exact_tv(&tamed, &q).unwrap();
        let tv_pq = exact_tv(&p, &q).unwrap();
        let reps = 50;
        let good = (0..reps)
            .filter(|&i| {
                let mut r = rng_from_seed(trial_seed(4, i));
                let est = distance_estimate(
                    params.m as usize,
                    || Ok(q.sample_exact(&mut r)),
                    |s| tamed.point_probability(s),
                    |s| q.point_probability(s),
                )
                .unwrap();
                let close = (est.z - truth).abs() <= params.gamma / 2.0;
                if close {
                    assert!((tv_pq - est.z).abs() <= params.gamma + 1e-12);
                }
                close
            })
            .count();
        assert!(good as f64 / reps as f64 >= 0.9, "{good}/{reps}");
    }

    #[test]
    fn end_to_end_equal_and_far() {
        let cfg = TesterConfig::engineering();
        let u = ExplicitDistribution::uniform(cube(3)).unwrap();
        let pm = ExplicitDistribution::point_mass(cube(3), &[0, 0, 0]).unwrap();
        let same = simulate_run(&u, &u, 0.2, 0.8, &cfg, 11).unwrap();
        assert_eq!(same.verdict, Verdict::Accept);
        let far = simulate_run(&u, &pm, 0.1, 0.6, &cfg, 12).unwrap();
        assert_eq!(far.verdict, Verdict::Reject);
        for r in [&same, &far] {
            assert!(!r.budget_exceeded);
            assert!(r.total_queries() <= r.params.budget);
            assert!(r.gamma_entries.iter().all(|g| (0.0..1.0).contains(g)));
            let z: f64 = r.gamma_entries.iter().sum::<f64>() / r.params.m as f64;
            assert!((z - r.z).abs() <= 1e-12);
        }
    }

    #[test]
    fn exhausted_budget_rejects() {
        let u = ExplicitDistribution::uniform(cube(2)).unwrap();
        let cfg = TesterConfig {
            budget_override: Some(1_000),
            ..TesterConfig::engineering()
        };
        let report = simulate_run(&u, &u, 0.0, 1.0, &cfg, 7).unwrap();
        assert!(report.budget_exceeded);
        assert_eq!(report.verdict, Verdict::Reject);
        assert_eq!(report.total_queries(), 1_000);
        let z: f64 = report.gamma_entries.iter().sum::<f64>() / report.params.m as f64;
        assert!((z - report.z).abs() <= 1e-12);
    }

    #[test]
    fn inner_oracle_budget_counts_as_exhaustion() {
        let u = ExplicitDistribution::uniform(cube(2)).unwrap();
        let p = SimulatedOracle::with_budget(&u, rng_from_seed(8), 10);
        let q = SimulatedOracle::new(&u, rng_from_seed(9));
        let report = sub_vs_sub(p, q, 0.0, 1.0, &TesterConfig::engineering(), 7).unwrap();
        assert!(report.budget_exceeded);
        assert_eq!(report.verdict, Verdict::Reject);
        assert_eq!(report.queries_p, 10);
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let a = ExplicitDistribution::uniform(cube(2)).unwrap();
        let b = ExplicitDistribution::uniform(cube(3)).unwrap();
        assert!(matches!(
            simulate_run(&a, &b, 0.1, 0.5, &TesterConfig::engineering(), 1),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = TesterConfig::engineering();
        let u = ExplicitDistribution::uniform(cube(2)).unwrap();
        let mut rng = rng_from_seed(10);
        let masses: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.1).collect();
        let q = ExplicitDistribution::new(cube(2), masses).unwrap();
        let a = simulate_run(&u, &q, 0.1, 0.5, &cfg, 99).unwrap();
        let b = simulate_run(&u, &q, 0.1, 0.5, &cfg, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
