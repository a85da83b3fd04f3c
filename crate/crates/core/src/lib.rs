//! Tolerant closeness testing of distributions over `Σ^n` with prefix-conditional
//! (subcube conditioning) sampling access.
//!
//! The crate provides the oracle interface and simulated oracles, fully known
//! distribution models used as ground truth, the negative-binomial point
//! estimator, θ-taming, the tolerant tester itself, and a statistical
//! validation harness.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod models;
pub mod oracle;
pub mod seeding;
pub mod taming;
pub mod tester;
pub mod verify;

pub use error::{Error, Result};
pub use estimator::{
    expected_queries, median_amplify, negative_binomial_count, sub_to_eval, PointEstimate,
};
pub use models::{
    exact_tv, parse_model_json, AnyModel, ChainDistribution, DistributionModel,
    ExplicitDistribution, ModelKind, ProductDistribution,
};
pub use oracle::{Alphabet, Domain, QueryMeter, SimulatedOracle, SubcondOracle, Symbol};
pub use taming::{tame_exact, TameMode, TamedOracle};
pub use tester::{
    derive_params, distance_estimate, sub_vs_sub, RunReport, TesterConfig, TesterParams, Verdict,
};
