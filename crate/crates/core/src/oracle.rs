//! Prefix-restricted subcube conditioning oracles.
//!
//! Every query fixes a prefix `σ[1..j-1]` and leaves the suffix free. An oracle
//! answers either with the next coordinate (a draw from the marginal
//! `D^j_prefix`) or with a full string from `D` conditioned on the prefix. Each
//! answer costs exactly one query on the oracle's meter.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::DistributionModel;

/// A symbol of `Σ = {0, .., |Σ|-1}`.
pub type Symbol = u32;

/// Largest enumerable domain, `|Σ|^n ≤ 2^24`.
pub const MAX_ENUMERABLE: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Alphabet(u32);

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet(2);

    pub fn new(size: u64) -> Result<Self> {
        if size < 2 || size > u32::MAX as u64 {
            return Err(Error::InvalidAlphabet(size));
        }
        Ok(Alphabet(size as u32))
    }

    pub fn size(self) -> u32 {
        self.0
    }

    pub fn is_binary(self) -> bool {
        self.0 == 2
    }

    pub fn contains(self, c: Symbol) -> bool {
        c < self.0
    }
}

impl TryFrom<u64> for Alphabet {
    type Error = Error;
    fn try_from(v: u64) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for u64 {
    fn from(a: Alphabet) -> u64 {
        a.0 as u64
    }
}

/// The string space `Σ^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    pub n: usize,
    pub alphabet: Alphabet,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]^{}", self.alphabet.size(), self.n)
    }
}

impl Domain {
    pub fn new(n: usize, alphabet: Alphabet) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension);
        }
        Ok(Domain { n, alphabet })
    }

    pub fn hypercube(n: usize) -> Result<Self> {
        Domain::new(n, Alphabet::BINARY)
    }

    /// `|Σ|^n`, or `None` on overflow.
    pub fn cardinality(&self) -> Option<u64> {
        (self.alphabet.size() as u64).checked_pow(u32::try_from(self.n).ok()?)
    }

    pub fn ensure_enumerable(&self) -> Result<u64> {
        match self.cardinality() {
            Some(size) if size <= MAX_ENUMERABLE => Ok(size),
            _ => Err(Error::DomainTooLarge(self.to_string())),
        }
    }

    pub fn ensure_same(&self, other: &Domain) -> Result<()> {
        if self != other {
            return Err(Error::DomainMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }

    /// A prefix may have any length in `0..n`; symbols must be in range.
    pub fn validate_prefix(&self, prefix: &[Symbol]) -> Result<()> {
        if prefix.len() >= self.n {
            return Err(Error::InvalidPrefix(format!(
                "length {} leaves no free coordinate in dimension {}",
                prefix.len(),
                self.n
            )));
        }
        self.check_symbols(prefix).map_err(Error::InvalidPrefix)
    }

    /// Like [`Domain::validate_prefix`] but also admits the full-length prefix.
    pub fn validate_partial(&self, prefix: &[Symbol]) -> Result<()> {
        if prefix.len() > self.n {
            return Err(Error::InvalidPrefix(format!(
                "length {} exceeds dimension {}",
                prefix.len(),
                self.n
            )));
        }
        self.check_symbols(prefix).map_err(Error::InvalidPrefix)
    }

    pub fn validate_string(&self, s: &[Symbol]) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::InvalidString(format!(
                "length {} in dimension {}",
                s.len(),
                self.n
            )));
        }
        self.check_symbols(s).map_err(Error::InvalidString)
    }

    fn check_symbols(&self, s: &[Symbol]) -> std::result::Result<(), String> {
        match s.iter().position(|&c| !self.alphabet.contains(c)) {
            Some(i) => Err(format!(
                "symbol {} at position {} is outside an alphabet of size {}",
                s[i],
                i,
                self.alphabet.size()
            )),
            None => Ok(()),
        }
    }

    /// Big-endian base-|Σ| rank of a full string; the first coordinate is the
    /// most significant digit, so every prefix subcube is a contiguous range.
    pub fn index_of(&self, s: &[Symbol]) -> usize {
        let base = self.alphabet.size() as usize;
        s.iter().fold(0, |acc, &c| acc * base + c as usize)
    }

    pub fn string_at(&self, mut index: usize) -> Vec<Symbol> {
        let base = self.alphabet.size() as usize;
        let mut s = vec![0; self.n];
        for slot in s.iter_mut().rev() {
            *slot = (index % base) as Symbol;
            index /= base;
        }
        s
    }

    /// Parse a string of symbols. Comma-separated integers are always accepted.
    /// Without commas, alphabets of at most 10 symbols read one symbol per digit
    /// and larger alphabets read the text as a single symbol.
    pub fn parse_symbols(&self, text: &str) -> Result<Vec<Symbol>> {
        let text = text.trim();
        let symbols: Vec<Symbol> = if text.is_empty() {
            Vec::new()
        } else if text.contains(',') || self.alphabet.size() > 10 {
            text.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<Symbol>()
                        .map_err(|_| Error::InvalidString(format!("bad symbol {tok:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|ch| {
                    ch.to_digit(10)
                        .ok_or_else(|| Error::InvalidString(format!("bad symbol {ch:?}")))
                })
                .collect::<Result<_>>()?
        };
        self.validate_partial(&symbols)?;
        Ok(symbols)
    }

    pub fn format_symbols(&self, s: &[Symbol]) -> String {
        if self.alphabet.size() <= 10 {
            s.iter()
                .map(|c| char::from_digit(*c, 10).unwrap())
                .collect()
        } else {
            s.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

/// Query counter with an optional hard ceiling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryMeter {
    count: u64,
    budget: Option<u64>,
}

impl QueryMeter {
    pub fn unlimited() -> Self {
        QueryMeter::default()
    }

    pub fn with_budget(budget: u64) -> Self {
        QueryMeter {
            count: 0,
            budget: Some(budget),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b - self.count)
    }

    /// Record one query. Fails without counting once the ceiling is reached.
    pub fn charge(&mut self) -> Result<()> {
        if let Some(budget) = self.budget {
            if self.count >= budget {
                return Err(Error::BudgetExhausted { budget });
            }
        }
        self.count += 1;
        Ok(())
    }
}

/// A meter shared by several oracles of a single run.
#[derive(Clone, Debug, Default)]
pub struct SharedMeter(Rc<RefCell<QueryMeter>>);

impl SharedMeter {
    pub fn new(meter: QueryMeter) -> Self {
        SharedMeter(Rc::new(RefCell::new(meter)))
    }

    pub fn charge(&self) -> Result<()> {
        self.0.borrow_mut().charge()
    }

    pub fn snapshot(&self) -> QueryMeter {
        *self.0.borrow()
    }

    pub fn count(&self) -> u64 {
        self.0.borrow().count()
    }

    /// Return a charge for a query the wrapped oracle failed to answer.
    fn refund(&self) {
        let mut meter = self.0.borrow_mut();
        meter.count = meter.count.saturating_sub(1);
    }
}

/// Prefix-conditioned sampling access to a distribution over `Σ^n`.
pub trait SubcondOracle {
    fn domain(&self) -> Domain;

    /// Draw coordinate `|prefix|+1` from `D^{|prefix|+1}_prefix`.
    fn sample_next(&mut self, prefix: &[Symbol]) -> Result<Symbol>;

    /// Draw a full string from `D` conditioned on the subcube of `prefix`.
    fn sample_full(&mut self, prefix: &[Symbol]) -> Result<Vec<Symbol>>;

    /// Queries issued through this oracle so far.
    fn queries(&self) -> u64;
}

impl<O: SubcondOracle + ?Sized> SubcondOracle for &mut O {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn sample_next(&mut self, prefix: &[Symbol]) -> Result<Symbol> {
        (**self).sample_next(prefix)
    }
    fn sample_full(&mut self, prefix: &[Symbol]) -> Result<Vec<Symbol>> {
        (**self).sample_full(prefix)
    }
    fn queries(&self) -> u64 {
        (**self).queries()
    }
}

/// An oracle answering from a fully known model.
///
/// `sample_next` draws the requested marginal directly rather than drawing a
/// full string and projecting; both cost one query.
pub struct SimulatedOracle<'m, M: ?Sized, R> {
    model: &'m M,
    rng: R,
    meter: QueryMeter,
}

impl<'m, M, R> SimulatedOracle<'m, M, R>
where
    M: DistributionModel + ?Sized,
    R: RngCore,
{
    pub fn new(model: &'m M, rng: R) -> Self {
        SimulatedOracle {
            model,
            rng,
            meter: QueryMeter::unlimited(),
        }
    }

    pub fn with_budget(model: &'m M, rng: R, budget: u64) -> Self {
        SimulatedOracle {
            model,
            rng,
            meter: QueryMeter::with_budget(budget),
        }
    }

    pub fn meter(&self) -> QueryMeter {
        self.meter
    }

    pub fn model(&self) -> &'m M {
        self.model
    }
}

impl<M, R> SubcondOracle for SimulatedOracle<'_, M, R>
where
    M: DistributionModel + ?Sized,
    R: RngCore,
{
    fn domain(&self) -> Domain {
        self.model.domain()
    }

    fn sample_next(&mut self, prefix: &[Symbol]) -> Result<Symbol> {
        self.model.domain().validate_prefix(prefix)?;
        self.meter.charge()?;
        Ok(self.model.sample_next(prefix, &mut self.rng))
    }

    fn sample_full(&mut self, prefix: &[Symbol]) -> Result<Vec<Symbol>> {
        let domain = self.model.domain();
        domain.validate_partial(prefix)?;
        self.meter.charge()?;
        let mut s = Vec::with_capacity(domain.n);
        s.extend_from_slice(prefix);
        while s.len() < domain.n {
            let c = self.model.sample_next(&s, &mut self.rng);
            s.push(c);
        }
        Ok(s)
    }

    fn queries(&self) -> u64 {
        self.meter.count()
    }
}

/// Charges every query of `inner` against a [`SharedMeter`] before issuing it.
pub struct Metered<O> {
    inner: O,
    meter: SharedMeter,
    local: u64,
}

impl<O: SubcondOracle> Metered<O> {
    pub fn new(inner: O, meter: SharedMeter) -> Self {
        Metered {
            inner,
            meter,
            local: 0,
        }
    }

    pub fn into_inner(self) -> O {
        self.inner
    }

    fn settle<T>(&mut self, answer: Result<T>) -> Result<T> {
        match answer {
            Ok(v) => {
                self.local += 1;
                Ok(v)
            }
            Err(e) => {
                self.meter.refund();
                Err(e)
            }
        }
    }
}

impl<O: SubcondOracle> SubcondOracle for Metered<O> {
    fn domain(&self) -> Domain {
        self.inner.domain()
    }

    fn sample_next(&mut self, prefix: &[Symbol]) -> Result<Symbol> {
        self.inner.domain().validate_prefix(prefix)?;
        self.meter.charge()?;
        let answer = self.inner.sample_next(prefix);
        self.settle(answer)
    }

    fn sample_full(&mut self, prefix: &[Symbol]) -> Result<Vec<Symbol>> {
        self.inner.domain().validate_partial(prefix)?;
        self.meter.charge()?;
        let answer = self.inner.sample_full(prefix);
        self.settle(answer)
    }

    fn queries(&self) -> u64 {
        self.local
    }
}
