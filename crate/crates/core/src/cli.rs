//! Command-line harness: model generation, point evaluation, taming checks,
//! tolerant testing and the validation suite.
//!
//! Every command is a pure function of its arguments and seed. Output is built
//! in memory and written only once the command has succeeded, so a failing
//! command leaves no partial file behind.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{expected_queries, sub_to_eval_with_k, successes_for};
use crate::models::{
    exact_tv, marginal_extremes, parse_model_json, random_model, AnyModel, DistributionModel,
    ExplicitDistribution, ModelDocument, ModelKind,
};
use crate::oracle::{Alphabet, Domain, SimulatedOracle};
use crate::seeding::{rng_from_seed, trial_seed};
use crate::taming::{tame_exact, TameMode, Taming};
use crate::tester::{
    derive_params, simulate_run, Profile, RunReport, TesterConfig, TesterParams, Verdict,
};
use crate::verify::run_suite;

/// Exit status for a successful command.
pub const EXIT_OK: u8 = 0;
/// Exit status for a Reject verdict in single-run mode or a failing scorecard.
pub const EXIT_NEGATIVE: u8 = 1;
/// Exit status for usage, configuration and IO errors.
pub const EXIT_ERROR: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "subcond",
    version,
    about = "Tolerant closeness testing under subcube-conditioning access"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a random model with Dirichlet(1) probability vectors.
    GenModel(GenModelArgs),
    /// Run the point estimator repeatedly on one string.
    EvalPoint(EvalPointArgs),
    /// Compare a model with its tamed counterpart exactly.
    TameCheck(TameCheckArgs),
    /// Run the tolerant tester on a scenario.
    Test(TestArgs),
    /// Measure mean query counts over a grid of dimensions.
    Bench(BenchArgs),
    /// Run the statistical validation suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GenModelArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: ModelKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub alphabet: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalPointArgs {
    /// Model document path.
    #[arg(long)]
    pub model: PathBuf,
    /// Full string, e.g. `0110` or `0,1,1,0`.
    #[arg(long)]
    pub sigma: String,
    /// Target accuracy in (0, 1/2].
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 500)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TameCheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub theta: f64,
    /// Defaults to hypercube for binary alphabets and hypergrid otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Hypercube,
    Hypergrid,
}

impl From<ModeArg> for TameMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hypercube => TameMode::Hypercube,
            ModeArg::Hypergrid => TameMode::Hypergrid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Paper,
    Engineering,
}

impl ProfileName {
    fn profile(self) -> Profile {
        match self {
            ProfileName::Paper => Profile::Paper,
            ProfileName::Engineering => Profile::engineering(),
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct TestArgs {
    /// Scenario document; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p_model: Option<PathBuf>,
    #[arg(long)]
    pub q_model: Option<PathBuf>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    #[arg(long, value_enum)]
    pub profile: Option<ProfileName>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.3f64])]
    pub gamma: Vec<f64>,
    /// Lower tolerance; the upper one is `eps1 + 2γ`.
    #[arg(long, default_value_t = 0.1)]
    pub eps1: f64,
    #[arg(long, value_enum, default_value_t = ProfileName::Engineering)]
    pub profile: ProfileName,
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A model given inline or as a path to a model document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Path(PathBuf),
    Inline(ModelDocument),
}

impl ModelSpec {
    /// Load the model; relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<AnyModel> {
        match self {
            ModelSpec::Inline(doc) => AnyModel::from_document(doc.clone()),
            ModelSpec::Path(path) => load_model(&base.join(path)),
        }
    }
}

/// `"paper"`, `"engineering"`, or an explicit profile object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(ProfileName),
    Explicit(Profile),
}

impl ProfileSpec {
    pub fn profile(self) -> Profile {
        match self {
            ProfileSpec::Named(name) => name.profile(),
            ProfileSpec::Explicit(p) => p,
        }
    }
}

/// A scenario document with every field optional, before flag overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub p_model: Option<ModelSpec>,
    pub q_model: Option<ModelSpec>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub profile: Option<ProfileSpec>,
    pub theta_override: Option<f64>,
    pub budget_override: Option<u64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A complete, validated scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub p_model: ModelSpec,
    pub q_model: ModelSpec,
    pub eps1: f64,
    pub eps2: f64,
    pub profile: Profile,
    pub theta_override: Option<f64>,
    pub budget_override: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ScenarioDocument {
    /// Fill in defaults and check every field that needs no file access.
    pub fn finish(self) -> Result<ScenarioConfig> {
        let missing =
            |field: &str| Error::InvalidParameter(format!("scenario is missing `{field}`"));
        let config = ScenarioConfig {
            p_model: self.p_model.ok_or_else(|| missing("p_model"))?,
            q_model: self.q_model.ok_or_else(|| missing("q_model"))?,
            eps1: self.eps1.ok_or_else(|| missing("eps1"))?,
            eps2: self.eps2.ok_or_else(|| missing("eps2"))?,
            profile: self
                .profile
                .map_or(Profile::engineering(), ProfileSpec::profile),
            theta_override: self.theta_override,
            budget_override: self.budget_override,
            trials: self.trials.unwrap_or(1),
            seed: self.seed.unwrap_or(0),
            out: self.out,
        };
        if config.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        // Validates ε1, ε2 and the profile multipliers.
        derive_params(
            1,
            Alphabet::BINARY,
            config.eps1,
            config.eps2,
            &config.tester_config(),
        )?;
        for spec in [&config.p_model, &config.q_model] {
            if let ModelSpec::Inline(doc) = spec {
                AnyModel::from_document(doc.clone())?;
            }
        }
        Ok(config)
    }
}

impl ScenarioConfig {
    pub fn tester_config(&self) -> TesterConfig {
        TesterConfig {
            profile: self.profile,
            theta_override: self.theta_override,
            budget_override: self.budget_override,
        }
    }
}

/// Parse and validate a scenario document. Model paths are not resolved.
pub fn parse_scenario_config(bytes: &[u8]) -> Result<ScenarioConfig> {
    let doc: ScenarioDocument = serde_json::from_slice(bytes)?;
    doc.finish()
}

pub fn load_model(path: &Path) -> Result<AnyModel> {
    let bytes = fs::read(path).map_err(|e| io_context(path, e))?;
    parse_model_json(&bytes)
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Rendered output of a command and the exit status it calls for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    pub out: Option<PathBuf>,
    pub exit: u8,
}

impl Outcome {
    fn ok(text: String, out: Option<PathBuf>) -> Self {
        Outcome {
            text,
            out,
            exit: EXIT_OK,
        }
    }

    /// Write to the output path, or to standard output when there is none.
    pub fn emit(&self) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, &self.text).map_err(|e| io_context(path, e)),
            None => {
                use std::io::Write;
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(self.text.as_bytes())?;
                stdout.flush()?;
                Ok(())
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Execute a parsed command without touching the output destination.
pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::GenModel(a) => Ok(Outcome::ok(cmd_gen_model(a)?, a.out.clone())),
        Command::EvalPoint(a) => Ok(Outcome::ok(to_json(&cmd_eval_point(a)?)?, a.out.clone())),
        Command::TameCheck(a) => Ok(Outcome::ok(to_json(&cmd_tame_check(a)?)?, a.out.clone())),
        Command::Test(a) => {
            let (config, report) = cmd_test(a)?;
            let single_reject = config.trials == 1 && report.runs[0].verdict == Verdict::Reject;
            Ok(Outcome {
                text: to_json(&report)?,
                out: config.out,
                exit: if single_reject {
                    EXIT_NEGATIVE
                } else {
                    EXIT_OK
                },
            })
        }
        Command::Bench(a) => Ok(Outcome::ok(cmd_bench(a)?, a.out.clone())),
        Command::Verify(a) => {
            let card = run_suite(a.seed)?;
            Ok(Outcome {
                text: to_json(&card)?,
                out: a.out.clone(),
                exit: if card.all_pass {
                    EXIT_OK
                } else {
                    EXIT_NEGATIVE
                },
            })
        }
    }
}

/// Execute and emit; returns the process exit status.
pub fn run(cli: &Cli) -> u8 {
    match execute(&cli.command).and_then(|o| o.emit().map(|()| o.exit)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn cmd_gen_model(a: &GenModelArgs) -> Result<String> {
    let domain = Domain::new(a.n, Alphabet::new(a.alphabet)?)?;
    let model = random_model(a.kind, domain, &mut rng_from_seed(a.seed))?;
    let mut s = model.to_json();
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalPointReport {
    pub sigma: String,
    pub eps: f64,
    pub k: u64,
    pub trials: u64,
    pub seed: u64,
    pub true_probability: f64,
    /// Estimates of runs stopped by the trial cap are recorded as 0.
    pub estimates: Vec<f64>,
    /// `None` when the true probability is 0 and the criterion does not apply.
    pub success_rate: Option<f64>,
    pub success_criterion: &'static str,
    pub capped_runs: u64,
    pub mean_queries: f64,
    /// `None` when some coordinate of σ has zero probability.
    pub expected_queries: Option<f64>,
}

/// Per-coordinate trial cap, in multiples of `k`, for strings of zero probability.
const ZERO_PROBABILITY_CAP_FACTOR: u64 = 16;

pub fn cmd_eval_point(a: &EvalPointArgs) -> Result<EvalPointReport> {
    if !(a.eps > 0.0 && a.eps <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1/2], got {}",
            a.eps
        )));
    }
    if a.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let model = load_model(&a.model)?;
    let domain = model.domain();
    let sigma = domain.parse_symbols(&a.sigma)?;
    domain.validate_string(&sigma)?;
    let k = successes_for(domain.n, a.eps)?;
    let truth = model.point_probability(&sigma)?;
    let expected = match expected_queries(&model, &sigma, a.eps) {
        Ok(v) => Some(v),
        Err(Error::InfiniteExpectation { .. }) => None,
        Err(e) => return Err(e),
    };
    // Without a cap the estimator would never stop on a zero-probability coordinate.
    let cap = expected.is_none().then(|| k * ZERO_PROBABILITY_CAP_FACTOR);

    let runs: Vec<Result<(f64, u64, bool)>> = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let mut oracle = SimulatedOracle::new(&model, rng_from_seed(trial_seed(a.seed, i)));
            match sub_to_eval_with_k(&mut oracle, k, &sigma, cap) {
                Ok(est) => Ok((est.value, est.queries, false)),
                Err(Error::TrialCapReached { .. }) => Ok((0.0, oracle.meter().count(), true)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let estimates: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let capped_runs = runs.iter().filter(|r| r.2).count() as u64;
    let mean_queries = runs.iter().map(|r| r.1 as f64).sum::<f64>() / a.trials as f64;
    let success_rate = (truth > 0.0).then(|| {
        let hits = estimates
            .iter()
            .filter(|&&v| (v - truth).abs() <= a.eps * truth)
            .count();
        hits as f64 / a.trials as f64
    });
    Ok(EvalPointReport {
        sigma: domain.format_symbols(&sigma),
        eps: a.eps,
        k,
        trials: a.trials,
        seed: a.seed,
        true_probability: truth,
        estimates,
        success_rate,
        success_criterion: if success_rate.is_some() {
            "applicable"
        } else {
            "not_applicable"
        },
        capped_runs,
        mean_queries,
        expected_queries: expected,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TameCheckReport {
    pub theta: f64,
    pub mode: TameMode,
    pub tv: f64,
    pub bound: f64,
    pub marginal_min: f64,
    pub marginal_max: f64,
    pub floor: f64,
    pub ceiling: f64,
    pub pass: bool,
}

pub fn cmd_tame_check(a: &TameCheckArgs) -> Result<TameCheckReport> {
    let model = load_model(&a.model)?;
    tame_check(&model, a.theta, a.mode.map(TameMode::from))
}

/// Exact TV between a model and its tamed counterpart, and the tamed marginal range.
pub fn tame_check(
    model: &dyn DistributionModel,
    theta: f64,
    mode: Option<TameMode>,
) -> Result<TameCheckReport> {
    let domain = model.domain();
    let mode = mode.unwrap_or_else(|| TameMode::for_alphabet(domain.alphabet));
    let taming = Taming::new(theta, mode, domain.alphabet)?;
    let tamed: ExplicitDistribution = tame_exact(model, theta, mode)?;
    let tv = exact_tv(model, &tamed)?;
    let (marginal_min, marginal_max) = marginal_extremes(&tamed)?;
    let (floor, ceiling) = taming.marginal_bounds();
    let bound = theta * domain.n as f64;
    let pass =
        tv <= bound + 1e-9 && marginal_min >= floor - 1e-12 && marginal_max <= ceiling + 1e-12;
    Ok(TameCheckReport {
        theta,
        mode,
        tv,
        bound,
        marginal_min,
        marginal_max,
        floor,
        ceiling,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub accept_rate: f64,
    pub mean_queries: f64,
    pub budget_exceeded_runs: u64,
    pub params: TesterParams,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub eps1: f64,
    pub eps2: f64,
    pub trials: u64,
    pub seed: u64,
    pub runs: Vec<RunReport>,
    pub aggregate: Aggregate,
}

/// Resolve the scenario from the optional document and the flag overrides.
pub fn resolve_scenario(a: &TestArgs) -> Result<(ScenarioConfig, PathBuf)> {
    let (mut doc, base) = match &a.config {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| io_context(path, e))?;
            let mut doc: ScenarioDocument = serde_json::from_slice(&bytes)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            doc.out = doc.out.map(|out| base.join(out));
            (doc, base)
        }
        None => (ScenarioDocument::default(), PathBuf::new()),
    };
    // Paths given as flags are relative to the working directory, not the document.
    let cwd = std::env::current_dir()?;
    let absolute = |p: &PathBuf| ModelSpec::Path(cwd.join(p));
    if let Some(p) = &a.p_model {
        doc.p_model = Some(absolute(p));
    }
    if let Some(q) = &a.q_model {
        doc.q_model = Some(absolute(q));
    }
    doc.eps1 = a.eps1.or(doc.eps1);
    doc.eps2 = a.eps2.or(doc.eps2);
    doc.profile = a.profile.map(ProfileSpec::Named).or(doc.profile);
    doc.trials = a.trials.or(doc.trials);
    doc.seed = a.seed.or(doc.seed);
    doc.out = a.out.clone().or(doc.out);
    Ok((doc.finish()?, base))
}

pub fn cmd_test(a: &TestArgs) -> Result<(ScenarioConfig, TestReport)> {
    let (config, base) = resolve_scenario(a)?;
    let p = config.p_model.load(&base)?;
    let q = config.q_model.load(&base)?;
    let report = run_scenario(&config, &p, &q)?;
    Ok((config, report))
}

/// Run `trials` independent replicas; replica `i` uses seed `trial_seed(seed, i)`.
pub fn run_scenario(
    config: &ScenarioConfig,
    p: &dyn DistributionModel,
    q: &dyn DistributionModel,
) -> Result<TestReport> {
    let tester = config.tester_config();
    let runs: Vec<Result<RunReport>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            simulate_run(
                p,
                q,
                config.eps1,
                config.eps2,
                &tester,
                trial_seed(config.seed, i),
            )
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let trials = runs.len() as f64;
    let accepts = runs.iter().filter(|r| r.verdict == Verdict::Accept).count();
    let aggregate = Aggregate {
        accept_rate: accepts as f64 / trials,
        mean_queries: runs.iter().map(|r| r.total_queries() as f64).sum::<f64>() / trials,
        budget_exceeded_runs: runs.iter().filter(|r| r.budget_exceeded).count() as u64,
        params: runs[0].params.clone(),
    };
    Ok(TestReport {
        eps1: config.eps1,
        eps2: config.eps2,
        trials: config.trials,
        seed: config.seed,
        runs,
        aggregate,
    })
}

/// One row of the scaling table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub gamma: f64,
    pub mean_queries: f64,
    /// Budget under the `paper` profile.
    #[serde(rename = "M")]
    pub budget: u64,
}

pub const BENCH_HEADER: &str = "n,gamma,mean_queries,M";

/// Mean total queries of the tester on `P = Q = uniform` for every `(n, γ)`.
pub fn bench_rows(
    ns: &[usize],
    gammas: &[f64],
    eps1: f64,
    profile: Profile,
    trials: u64,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let config = TesterConfig {
        profile,
        theta_override: None,
        budget_override: None,
    };
    let mut rows = Vec::new();
    for &gamma in gammas {
        let eps2 = eps1 + 2.0 * gamma;
        for &n in ns {
            let uniform = ExplicitDistribution::uniform(Domain::hypercube(n)?)?;
            let paper = derive_params(n, Alphabet::BINARY, eps1, eps2, &TesterConfig::default())?;
            let cell_seed = trial_seed(seed, n as u64) ^ gamma.to_bits();
            let totals: Vec<Result<u64>> = (0..trials)
                .into_par_iter()
                .map(|i| {
                    simulate_run(
                        &uniform,
                        &uniform,
                        eps1,
                        eps2,
                        &config,
                        trial_seed(cell_seed, i),
                    )
                    .map(|r| r.total_queries())
                })
                .collect();
            let totals = totals.into_iter().collect::<Result<Vec<_>>>()?;
            rows.push(BenchRow {
                n,
                gamma,
                mean_queries: totals.iter().map(|&q| q as f64).sum::<f64>() / trials as f64,
                budget: paper.budget,
            });
        }
    }
    Ok(rows)
}

pub fn render_bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BENCH_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.n, r.gamma, r.mean_queries, r.budget
        ));
    }
    s
}

pub fn cmd_bench(a: &BenchArgs) -> Result<String> {
    let rows = bench_rows(
        &a.n,
        &a.gamma,
        a.eps1,
        a.profile.profile(),
        a.trials,
        a.seed,
    )?;
    Ok(render_bench_csv(&rows))
}
