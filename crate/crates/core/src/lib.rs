//! Agent-based hidden-action model: a risk-neutral principal and a CARA agent
//! with limited memory learn about a noisy environment while the principal
//! searches for the incentive contract period by period.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the simulation study uses.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contract;
pub mod decision;
pub mod engine;
pub mod error;
pub mod learning;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use contract::{
    action_bounds, best_response, premium_for_effort, solve_second_best, ActionBounds,
};
pub use decision::{agent_respond, principal_propose, Proposal, Response};
pub use engine::{
    expand_grid, run_round, run_scenario, run_scenario_with, RoundResult, ScenarioSpec,
};
pub use error::{HalError, Result};
pub use learning::{estimate_exogenous, learned_expectation, observe_exogenous, remember};
pub use model::{
    agent_utility, outcome, principal_utility, Benchmark, Contract, Memory, MemoryBuffer,
    ModelParams, StepRecord,
};
pub use scalar::Scalar;
pub use stats::{
    cv_stabilization, euclidean_distance, normalize_series, significance_test, CvReport, Metric,
    NormalizedSeries,
};

pub type Params = ModelParams<f64>;
pub type Bench = Benchmark<f64>;
pub type Spec = ScenarioSpec<f64>;
pub type Round = RoundResult<f64>;
pub type Step = StepRecord<f64>;
pub type Series = NormalizedSeries<f64>;
