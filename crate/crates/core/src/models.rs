//! Fully known distributions over `Σ^n`.
//!
//! Models expose exact conditional marginals, point probabilities and ancestral
//! sampling. They back the simulated oracles and serve as ground truth for
//! every statistical check.

use rand::{Rng, RngCore};
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::oracle::{Alphabet, Domain, Symbol};

const NORMALIZATION_TOL: f64 = 1e-12;

pub trait DistributionModel: Send + Sync {
    fn domain(&self) -> Domain;

    /// `D^{|prefix|+1}_prefix(c)` without argument validation. A prefix whose
    /// subcube has zero mass yields the uniform value `1/|Σ|`.
    fn conditional(&self, prefix: &[Symbol], c: Symbol) -> f64;

    fn marginal(&self, prefix: &[Symbol], c: Symbol) -> Result<f64> {
        let domain = self.domain();
        domain.validate_prefix(prefix)?;
        if !domain.alphabet.contains(c) {
            return Err(Error::InvalidString(format!(
                "symbol {c} outside alphabet of size {}",
                domain.alphabet.size()
            )));
        }
        Ok(self.conditional(prefix, c))
    }

    fn marginal_vector(&self, prefix: &[Symbol]) -> Result<Vec<f64>> {
        let domain = self.domain();
        domain.validate_prefix(prefix)?;
        Ok((0..domain.alphabet.size())
            .map(|c| self.conditional(prefix, c))
            .collect())
    }

    /// `D(σ)`; by default the chain-rule product of conditionals.
    fn point_probability(&self, s: &[Symbol]) -> Result<f64> {
        self.domain().validate_string(s)?;
        Ok(chain_rule_probability(self, s))
    }

    /// Draw coordinate `|prefix|+1` given `prefix` (unchecked).
    fn sample_next(&self, prefix: &[Symbol], rng: &mut dyn RngCore) -> Symbol {
        let size = self.domain().alphabet.size();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for c in 0..size {
            let p = self.conditional(prefix, c);
            if p > 0.0 {
                acc += p;
                last_positive = c;
                if u < acc {
                    return c;
                }
            }
        }
        last_positive
    }

    fn sample_exact(&self, rng: &mut dyn RngCore) -> Vec<Symbol> {
        let n = self.domain().n;
        let mut s = Vec::with_capacity(n);
        while s.len() < n {
            let c = self.sample_next(&s, rng);
            s.push(c);
        }
        s
    }

    /// Dense mass table indexed by [`Domain::index_of`].
    fn dense_masses(&self) -> Result<Vec<f64>> {
        let domain = self.domain();
        let size = domain.ensure_enumerable()? as usize;
        let mut out = Vec::with_capacity(size);
        let mut prefix = Vec::with_capacity(domain.n);
        enumerate_masses(self, &domain, &mut prefix, 1.0, &mut out);
        Ok(out)
    }
}

fn enumerate_masses<M: DistributionModel + ?Sized>(
    model: &M,
    domain: &Domain,
    prefix: &mut Vec<Symbol>,
    mass: f64,
    out: &mut Vec<f64>,
) {
    if prefix.len() == domain.n {
        out.push(mass);
        return;
    }
    for c in 0..domain.alphabet.size() {
        let p = model.conditional(prefix, c);
        prefix.push(c);
        enumerate_masses(model, domain, prefix, mass * p, out);
        prefix.pop();
    }
}

pub fn chain_rule_probability<M: DistributionModel + ?Sized>(model: &M, s: &[Symbol]) -> f64 {
    (0..s.len())
        .map(|j| model.conditional(&s[..j], s[j]))
        .product()
}

/// `½ Σ_σ |P(σ) − Q(σ)|` by full enumeration.
pub fn exact_tv(p: &dyn DistributionModel, q: &dyn DistributionModel) -> Result<f64> {
    p.domain().ensure_same(&q.domain())?;
    let pm = p.dense_masses()?;
    let qm = q.dense_masses()?;
    let l1: f64 = pm.iter().zip(&qm).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

/// Smallest and largest conditional marginal over every prefix of positive mass.
pub fn marginal_extremes(model: &dyn DistributionModel) -> Result<(f64, f64)> {
    let domain = model.domain();
    domain.ensure_enumerable()?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut prefix = Vec::with_capacity(domain.n);
    visit_prefixes(model, &domain, &mut prefix, 1.0, &mut |prefix| {
        for c in 0..domain.alphabet.size() {
            let p = model.conditional(prefix, c);
            lo = lo.min(p);
            hi = hi.max(p);
        }
    });
    Ok((lo, hi))
}

fn visit_prefixes(
    model: &dyn DistributionModel,
    domain: &Domain,
    prefix: &mut Vec<Symbol>,
    mass: f64,
    f: &mut dyn FnMut(&[Symbol]),
) {
    if prefix.len() == domain.n || mass == 0.0 {
        return;
    }
    f(prefix);
    for c in 0..domain.alphabet.size() {
        let p = model.conditional(prefix, c);
        prefix.push(c);
        visit_prefixes(model, domain, prefix, mass * p, f);
        prefix.pop();
    }
}

fn normalize(values: &mut [f64], what: &str) -> Result<()> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what} contains invalid probability {bad}"
        )));
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidDistribution(format!(
            "{what} has total mass {total}"
        )));
    }
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        values.iter_mut().for_each(|v| *v /= total);
    }
    Ok(())
}

fn probability_vector(mut v: Vec<f64>, alphabet: Alphabet, what: &str) -> Result<Vec<f64>> {
    if v.len() != alphabet.size() as usize {
        return Err(Error::InvalidDistribution(format!(
            "{what} has {} entries, alphabet has {}",
            v.len(),
            alphabet.size()
        )));
    }
    normalize(&mut v, what)?;
    Ok(v)
}

/// Dense table of `|Σ|^n` masses.
///
/// Subcube masses for every prefix length are stored level by level, each
/// parent being the sum of its children, so subcube additivity is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitDistribution {
    domain: Domain,
    levels: Vec<Vec<f64>>,
}

impl ExplicitDistribution {
    pub fn new(domain: Domain, mut mass: Vec<f64>) -> Result<Self> {
        let size = domain.ensure_enumerable()? as usize;
        if mass.len() != size {
            return Err(Error::InvalidDistribution(format!(
                "expected {size} masses for {domain}, got {}",
                mass.len()
            )));
        }
        normalize(&mut mass, "mass table")?;
        let base = domain.alphabet.size() as usize;
        let mut levels = vec![Vec::new(); domain.n + 1];
        levels[domain.n] = mass;
        for j in (0..domain.n).rev() {
            let parent: Vec<f64> = levels[j + 1]
                .chunks_exact(base)
                .map(|children| children.iter().sum())
                .collect();
            levels[j] = parent;
        }
        Ok(ExplicitDistribution { domain, levels })
    }

    pub fn uniform(domain: Domain) -> Result<Self> {
        let size = domain.ensure_enumerable()? as usize;
        ExplicitDistribution::new(domain, vec![1.0 / size as f64; size])
    }

    pub fn point_mass(domain: Domain, s: &[Symbol]) -> Result<Self> {
        domain.validate_string(s)?;
        let size = domain.ensure_enumerable()? as usize;
        let mut mass = vec![0.0; size];
        mass[domain.index_of(s)] = 1.0;
        ExplicitDistribution::new(domain, mass)
    }

    pub fn from_model(model: &dyn DistributionModel) -> Result<Self> {
        ExplicitDistribution::new(model.domain(), model.dense_masses()?)
    }

    pub fn masses(&self) -> &[f64] {
        &self.levels[self.domain.n]
    }

    /// `D(S_prefix)`.
    pub fn subcube_mass(&self, prefix: &[Symbol]) -> Result<f64> {
        self.domain.validate_partial(prefix)?;
        Ok(self.levels[prefix.len()][self.prefix_index(prefix)])
    }

    fn prefix_index(&self, prefix: &[Symbol]) -> usize {
        let base = self.domain.alphabet.size() as usize;
        prefix.iter().fold(0, |acc, &c| acc * base + c as usize)
    }
}

impl DistributionModel for ExplicitDistribution {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn conditional(&self, prefix: &[Symbol], c: Symbol) -> f64 {
        let base = self.domain.alphabet.size() as usize;
        let j = prefix.len();
        let idx = self.prefix_index(prefix);
        let parent = self.levels[j][idx];
        if parent == 0.0 {
            return 1.0 / base as f64;
        }
        self.levels[j + 1][idx * base + c as usize] / parent
    }

    fn point_probability(&self, s: &[Symbol]) -> Result<f64> {
        self.domain.validate_string(s)?;
        Ok(self.masses()[self.domain.index_of(s)])
    }

    fn dense_masses(&self) -> Result<Vec<f64>> {
        Ok(self.masses().to_vec())
    }
}

/// Independent coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductDistribution {
    domain: Domain,
    marginals: Vec<Vec<f64>>,
}

impl ProductDistribution {
    pub fn new(domain: Domain, marginals: Vec<Vec<f64>>) -> Result<Self> {
        if marginals.len() != domain.n {
            return Err(Error::InvalidDistribution(format!(
                "{} marginal vectors for dimension {}",
                marginals.len(),
                domain.n
            )));
        }
        let marginals = marginals
            .into_iter()
            .enumerate()
            .map(|(j, v)| probability_vector(v, domain.alphabet, &format!("marginal {j}")))
            .collect::<Result<_>>()?;
        Ok(ProductDistribution { domain, marginals })
    }

    /// Every coordinate shares the same marginal vector.
    pub fn iid(domain: Domain, marginal: Vec<f64>) -> Result<Self> {
        ProductDistribution::new(domain, vec![marginal; domain.n])
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }
}

impl DistributionModel for ProductDistribution {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn conditional(&self, prefix: &[Symbol], c: Symbol) -> f64 {
        let reachable = prefix
            .iter()
            .enumerate()
            .all(|(i, &s)| self.marginals[i][s as usize] > 0.0);
        if !reachable {
            return 1.0 / self.domain.alphabet.size() as f64;
        }
        self.marginals[prefix.len()][c as usize]
    }
}

/// A first-order Markov chain along the coordinates, with a separate
/// transition matrix for each step.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDistribution {
    domain: Domain,
    initial: Vec<f64>,
    transitions: Vec<Vec<Vec<f64>>>,
}

impl ChainDistribution {
    pub fn new(domain: Domain, initial: Vec<f64>, transitions: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let initial = probability_vector(initial, domain.alphabet, "initial vector")?;
        if transitions.len() != domain.n - 1 {
            return Err(Error::InvalidDistribution(format!(
                "{} transition matrices for dimension {} (need {})",
                transitions.len(),
                domain.n,
                domain.n - 1
            )));
        }
        let size = domain.alphabet.size() as usize;
        let transitions = transitions
            .into_iter()
            .enumerate()
            .map(|(step, matrix)| {
                if matrix.len() != size {
                    return Err(Error::InvalidDistribution(format!(
                        "transition {step} has {} rows, alphabet has {size}",
                        matrix.len()
                    )));
                }
                matrix
                    .into_iter()
                    .enumerate()
                    .map(|(r, row)| {
                        probability_vector(
                            row,
                            domain.alphabet,
                            &format!("transition {step} row {r}"),
                        )
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(ChainDistribution {
            domain,
            initial,
            transitions,
        })
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transitions(&self) -> &[Vec<Vec<f64>>] {
        &self.transitions
    }

    fn step(&self, prefix: &[Symbol], j: usize) -> &[f64] {
        if j == 0 {
            &self.initial
        } else {
            &self.transitions[j - 1][prefix[j - 1] as usize]
        }
    }
}

impl DistributionModel for ChainDistribution {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn conditional(&self, prefix: &[Symbol], c: Symbol) -> f64 {
        let reachable = (0..prefix.len()).all(|j| self.step(prefix, j)[prefix[j] as usize] > 0.0);
        if !reachable {
            return 1.0 / self.domain.alphabet.size() as f64;
        }
        self.step(prefix, prefix.len())[c as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Explicit,
    Product,
    Chain,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(ModelKind::Explicit),
            "product" => Ok(ModelKind::Product),
            "chain" => Ok(ModelKind::Chain),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

/// Any of the supported model families, as read from a model document.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Explicit(ExplicitDistribution),
    Product(ProductDistribution),
    Chain(ChainDistribution),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Explicit(_) => ModelKind::Explicit,
            AnyModel::Product(_) => ModelKind::Product,
            AnyModel::Chain(_) => ModelKind::Chain,
        }
    }

    fn inner(&self) -> &dyn DistributionModel {
        match self {
            AnyModel::Explicit(m) => m,
            AnyModel::Product(m) => m,
            AnyModel::Chain(m) => m,
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        let domain = self.domain();
        let payload = match self {
            AnyModel::Explicit(m) => serde_json::json!(m.masses()),
            AnyModel::Product(m) => serde_json::json!(m.marginals()),
            AnyModel::Chain(m) => serde_json::json!(ChainPayload {
                initial: m.initial().to_vec(),
                transitions: m.transitions().to_vec(),
            }),
        };
        ModelDocument {
            kind: self.kind(),
            n: domain.n,
            alphabet_size: domain.alphabet.size() as u64,
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents serialize")
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        let domain = Domain::new(doc.n, Alphabet::new(doc.alphabet_size)?)?;
        Ok(match doc.kind {
            ModelKind::Explicit => {
                let mass: Vec<f64> = serde_json::from_value(doc.payload)?;
                AnyModel::Explicit(ExplicitDistribution::new(domain, mass)?)
            }
            ModelKind::Product => {
                let marginals: Vec<Vec<f64>> = serde_json::from_value(doc.payload)?;
                AnyModel::Product(ProductDistribution::new(domain, marginals)?)
            }
            ModelKind::Chain => {
                let chain: ChainPayload = serde_json::from_value(doc.payload)?;
                AnyModel::Chain(ChainDistribution::new(
                    domain,
                    chain.initial,
                    chain.transitions,
                )?)
            }
        })
    }
}

impl From<ExplicitDistribution> for AnyModel {
    fn from(m: ExplicitDistribution) -> Self {
        AnyModel::Explicit(m)
    }
}

impl From<ProductDistribution> for AnyModel {
    fn from(m: ProductDistribution) -> Self {
        AnyModel::Product(m)
    }
}

impl From<ChainDistribution> for AnyModel {
    fn from(m: ChainDistribution) -> Self {
        AnyModel::Chain(m)
    }
}

impl DistributionModel for AnyModel {
    fn domain(&self) -> Domain {
        self.inner().domain()
    }
    fn conditional(&self, prefix: &[Symbol], c: Symbol) -> f64 {
        self.inner().conditional(prefix, c)
    }
    fn point_probability(&self, s: &[Symbol]) -> Result<f64> {
        self.inner().point_probability(s)
    }
    fn sample_next(&self, prefix: &[Symbol], rng: &mut dyn RngCore) -> Symbol {
        self.inner().sample_next(prefix, rng)
    }
    fn dense_masses(&self) -> Result<Vec<f64>> {
        self.inner().dense_masses()
    }
}

/// On-disk model format: `{kind, n, alphabet_size, payload}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub kind: ModelKind,
    pub n: usize,
    pub alphabet_size: u64,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainPayload {
    initial: Vec<f64>,
    transitions: Vec<Vec<Vec<f64>>>,
}

/// Parse and validate a model document.
pub fn parse_model_json(bytes: &[u8]) -> Result<AnyModel> {
    let doc: ModelDocument = serde_json::from_slice(bytes)?;
    AnyModel::from_document(doc)
}

fn dirichlet_vector(len: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    // Symmetric Dirichlet(1): normalized standard exponentials.
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            return v.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Draw a random model whose probability vectors are symmetric Dirichlet(1).
pub fn random_model(kind: ModelKind, domain: Domain, rng: &mut dyn RngCore) -> Result<AnyModel> {
    let size = domain.alphabet.size() as usize;
    Ok(match kind {
        ModelKind::Explicit => {
            let cells = domain.ensure_enumerable()? as usize;
            AnyModel::Explicit(ExplicitDistribution::new(
                domain,
                dirichlet_vector(cells, rng),
            )?)
        }
        ModelKind::Product => {
            let marginals = (0..domain.n).map(|_| dirichlet_vector(size, rng)).collect();
            AnyModel::Product(ProductDistribution::new(domain, marginals)?)
        }
        ModelKind::Chain => {
            let initial = dirichlet_vector(size, rng);
            let transitions = (1..domain.n)
                .map(|_| (0..size).map(|_| dirichlet_vector(size, rng)).collect())
                .collect();
            AnyModel::Chain(ChainDistribution::new(domain, initial, transitions)?)
        }
    })
}
