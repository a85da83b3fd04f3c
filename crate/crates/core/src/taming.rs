//! θ-taming: mixing every conditional marginal with the uniform distribution.
//!
//! Hypercube: `D'^ℓ_ρ(c) = (1−2θ)·D^ℓ_ρ(c) + θ`, so every marginal lies in
//! `[θ, 1−θ]`. Hypergrid: `D'^ℓ_ρ(c) = (1−θ)·D^ℓ_ρ(c) + θ/|Σ|`, with floor
//! `θ/|Σ|`. In both cases `d_TV(D, D') ≤ θn`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DistributionModel, ExplicitDistribution};
use crate::oracle::{Alphabet, Domain, SubcondOracle, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TameMode {
    Hypercube,
    Hypergrid,
}

impl TameMode {
    /// Hypercube for binary alphabets, hypergrid otherwise.
    pub fn for_alphabet(alphabet: Alphabet) -> Self {
        if alphabet.is_binary() {
            TameMode::Hypercube
        } else {
            TameMode::Hypergrid
        }
    }
}

impl std::str::FromStr for TameMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypercube" => Ok(TameMode::Hypercube),
            "hypergrid" => Ok(TameMode::Hypergrid),
            other => Err(Error::InvalidParameter(format!(
                "unknown taming mode {other:?}"
            ))),
        }
    }
}

/// Validated taming parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Taming {
    theta: f64,
    mode: TameMode,
    alphabet: Alphabet,
}

impl Taming {
    pub fn new(theta: f64, mode: TameMode, alphabet: Alphabet) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "taming parameter must lie in (0, 1/2), got {theta}"
            )));
        }
        if mode == TameMode::Hypercube && !alphabet.is_binary() {
            return Err(Error::InvalidParameter(format!(
                "hypercube taming needs a binary alphabet, got size {}",
                alphabet.size()
            )));
        }
        Ok(Taming {
            theta,
            mode,
            alphabet,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mode(&self) -> TameMode {
        self.mode
    }

    /// Probability of answering from the inner distribution.
    pub fn delegate_probability(&self) -> f64 {
        match self.mode {
            TameMode::Hypercube => 1.0 - 2.0 * self.theta,
            TameMode::Hypergrid => 1.0 - self.theta,
        }
    }

    pub fn apply(&self, p: f64) -> f64 {
        let size = self.alphabet.size() as f64;
        match self.mode {
            TameMode::Hypercube => (1.0 - 2.0 * self.theta) * p + self.theta,
            TameMode::Hypergrid => (1.0 - self.theta) * p + self.theta / size,
        }
    }

    /// Bounds every tamed marginal must satisfy.
    pub fn marginal_bounds(&self) -> (f64, f64) {
        let size = self.alphabet.size() as f64;
        match self.mode {
            TameMode::Hypercube => (self.theta, 1.0 - self.theta),
            TameMode::Hypergrid => (self.theta / size, 1.0 - self.theta + self.theta / size),
        }
    }
}

/// Oracle access to the tamed distribution given oracle access to the original.
///
/// The uniform branch is answered locally, so it costs no inner query.
pub struct TamedOracle<O, R> {
    inner: O,
    taming: Taming,
    rng: R,
}

impl<O: SubcondOracle, R: RngCore> TamedOracle<O, R> {
    pub fn new(inner: O, theta: f64, mode: TameMode, rng: R) -> Result<Self> {
        let taming = Taming::new(theta, mode, inner.domain().alphabet)?;
        Ok(TamedOracle { inner, taming, rng })
    }

    pub fn taming(&self) -> Taming {
        self.taming
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: SubcondOracle, R: RngCore> SubcondOracle for TamedOracle<O, R> {
    fn domain(&self) -> Domain {
        self.inner.domain()
    }

    fn sample_next(&mut self, prefix: &[Symbol]) -> Result<Symbol> {
        self.inner.domain().validate_prefix(prefix)?;
        if self.rng.random::<f64>() < self.taming.delegate_probability() {
            self.inner.sample_next(prefix)
        } else {
            Ok(self.rng.random_range(0..self.taming.alphabet.size()))
        }
    }

    /// Ancestral draw through `sample_next`; costs one inner query per
    /// delegated coordinate rather than one in total.
    fn sample_full(&mut self, prefix: &[Symbol]) -> Result<Vec<Symbol>> {
        let domain = self.inner.domain();
        domain.validate_partial(prefix)?;
        let mut s = prefix.to_vec();
        while s.len() < domain.n {
            let c = self.sample_next(&s)?;
            s.push(c);
        }
        Ok(s)
    }

    fn queries(&self) -> u64 {
        self.inner.queries()
    }
}

/// The tamed counterpart of a model, with exact marginals.
pub struct TamedModel<'a, M: ?Sized> {
    inner: &'a M,
    taming: Taming,
}

impl<'a, M: DistributionModel + ?Sized> TamedModel<'a, M> {
    pub fn new(inner: &'a M, theta: f64, mode: TameMode) -> Result<Self> {
        let taming = Taming::new(theta, mode, inner.domain().alphabet)?;
        Ok(TamedModel { inner, taming })
    }
}

impl<M: DistributionModel + ?Sized> DistributionModel for TamedModel<'_, M> {
    fn domain(&self) -> Domain {
        self.inner.domain()
    }

    fn conditional(&self, prefix: &[Symbol], c: Symbol) -> f64 {
        self.taming.apply(self.inner.conditional(prefix, c))
    }
}

/// Materialize `D'` as a dense table by ancestral recursion.
pub fn tame_exact(
    model: &dyn DistributionModel,
    theta: f64,
    mode: TameMode,
) -> Result<ExplicitDistribution> {
    model.domain().ensure_enumerable()?;
    ExplicitDistribution::from_model(&TamedModel::new(model, theta, mode)?)
}
