//! The per-period simulation loop, independent rounds per scenario, and the
//! scenario grid.
//!
//! One period runs: beliefs from memory, the principal's proposal, the
//! agent's response, the noise draw, realization, and memory updates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contract::solve_second_best;
use crate::decision::{agent_respond, principal_propose};
use crate::learning::{estimate_exogenous, learned_expectation, observe_exogenous};
use crate::model::{
    agent_utility, compensation, outcome, Benchmark, Memory, MemoryBuffer, ModelParams, StepRecord,
};
use crate::rng::{round_seed, RoundStreams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec<S> {
    pub params: ModelParams<S>,
    pub scenario_id: String,
    pub base_seed: u64,
}

impl<S: Scalar> ScenarioSpec<S> {
    pub fn new(params: ModelParams<S>, base_seed: u64) -> Self {
        let scenario_id = scenario_id(
            params.memory_principal,
            params.memory_agent,
            params.sigma_frac,
        );
        ScenarioSpec {
            params,
            scenario_id,
            base_seed,
        }
    }

    pub fn round_seed(&self, round_index: usize) -> u64 {
        round_seed(self.base_seed, &self.scenario_id, round_index as u64)
    }
}

/// Identifier such as `mp1_ma5_s0.25` or `mpinf_ma3_s0.05`.
pub fn scenario_id<S: Scalar>(
    memory_principal: Memory,
    memory_agent: Memory,
    sigma_frac: S,
) -> String {
    format!("mp{memory_principal}_ma{memory_agent}_s{sigma_frac}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult<S> {
    pub steps: Vec<StepRecord<S>>,
    /// Periods without an accepted contract.
    pub rejections: usize,
    pub seed: u64,
}

/// Mutable state of one round in progress.
#[derive(Debug, Clone)]
pub struct RoundState<S> {
    params: ModelParams<S>,
    sigma: S,
    streams: RoundStreams,
    principal_memory: MemoryBuffer<S>,
    agent_memory: MemoryBuffer<S>,
    previous_incited: S,
    t: usize,
    rejections: usize,
    seed: u64,
}

impl<S: Scalar> RoundState<S> {
    pub fn new(spec: &ScenarioSpec<S>, round_index: usize, benchmark: &Benchmark<S>) -> Self {
        let seed = spec.round_seed(round_index);
        RoundState {
            params: spec.params.clone(),
            sigma: spec.params.sigma_frac * benchmark.outcome_star,
            streams: RoundStreams::new(seed),
            principal_memory: MemoryBuffer::new(spec.params.memory_principal),
            agent_memory: MemoryBuffer::new(spec.params.memory_agent),
            previous_incited: S::zero(),
            t: 0,
            rejections: 0,
            seed,
        }
    }

    pub fn principal_memory(&self) -> &MemoryBuffer<S> {
        &self.principal_memory
    }

    pub fn agent_memory(&self) -> &MemoryBuffer<S> {
        &self.agent_memory
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }

    /// Runs the next period and returns its record.
    pub fn step(&mut self) -> StepRecord<S> {
        self.t += 1;
        let p = &self.params;
        let belief_principal = learned_expectation(&self.principal_memory, p.mu);
        let belief_agent = learned_expectation(&self.agent_memory, p.mu);

        let proposal = principal_propose(
            belief_principal,
            self.previous_incited,
            p.eta,
            p.reservation_utility,
            &mut self.streams.search,
        );
        let response = proposal
            .map(|prop| agent_respond(&prop.contract, belief_agent, p.eta, p.reservation_utility));
        let theta = self.streams.noise.normal(p.mu, self.sigma);

        let mut record = StepRecord {
            t: self.t,
            effort: S::zero(),
            theta,
            outcome: S::zero(),
            compensation: S::zero(),
            utility_principal: S::zero(),
            utility_agent: p.reservation_utility,
            accepted: false,
            premium: S::zero(),
            incited_effort: self.previous_incited,
            belief_principal,
            belief_agent,
        };

        if let Some(prop) = proposal {
            record.premium = prop.contract.premium;
            record.incited_effort = prop.contract.incited_effort;
            self.previous_incited = prop.contract.incited_effort;
        }

        match (proposal, response) {
            (Some(prop), Some(resp)) if resp.accepted => {
                let x = outcome(resp.effort, theta);
                let s = compensation(x, prop.contract.premium);
                record.accepted = true;
                record.effort = resp.effort;
                record.outcome = x;
                record.compensation = s;
                record.utility_principal = x - s;
                record.utility_agent = agent_utility(s, resp.effort, p.eta);
                self.principal_memory
                    .push(estimate_exogenous(x, prop.contract.incited_effort));
                self.agent_memory.push(observe_exogenous(x, resp.effort));
            }
            _ => {
                // No relationship output: only the agent sees the environment.
                log::debug!("t={} no accepted contract (seed {})", self.t, self.seed);
                self.rejections += 1;
                self.agent_memory.push(theta);
            }
        }
        record
    }

    pub fn finish(self, steps: Vec<StepRecord<S>>) -> RoundResult<S> {
        RoundResult {
            steps,
            rejections: self.rejections,
            seed: self.seed,
        }
    }
}

/// Runs all periods of one round.
pub fn run_round<S: Scalar>(
    spec: &ScenarioSpec<S>,
    round_index: usize,
    benchmark: &Benchmark<S>,
) -> RoundResult<S> {
    let mut state = RoundState::new(spec, round_index, benchmark);
    let steps = (0..spec.params.timesteps).map(|_| state.step()).collect();
    state.finish(steps)
}

/// All rounds of a scenario against a precomputed benchmark, in round order.
pub fn run_scenario_with<S: Scalar>(
    spec: &ScenarioSpec<S>,
    benchmark: &Benchmark<S>,
) -> Vec<RoundResult<S>> {
    (0..spec.params.rounds)
        .into_par_iter()
        .map(|r| run_round(spec, r, benchmark))
        .collect()
}

/// All rounds of a scenario; solves the benchmark for the scenario's `eta`.
pub fn run_scenario<S: Scalar>(spec: &ScenarioSpec<S>) -> Vec<RoundResult<S>> {
    let benchmark = solve_second_best(spec.params.eta);
    run_scenario_with(spec, &benchmark)
}

/// Cartesian product of the memory and noise grids, principal memory
/// outermost, noise innermost. Other fields are taken from `constants`.
pub fn expand_grid<S: Scalar>(
    memory_principal: &[Memory],
    memory_agent: &[Memory],
    sigma_frac: &[S],
    constants: &ModelParams<S>,
    base_seed: u64,
) -> Vec<ScenarioSpec<S>> {
    let mut specs =
        Vec::with_capacity(memory_principal.len() * memory_agent.len() * sigma_frac.len());
    for &mp in memory_principal {
        for &ma in memory_agent {
            for &sf in sigma_frac {
                let params = ModelParams {
                    memory_principal: mp,
                    memory_agent: ma,
                    sigma_frac: sf,
                    ..constants.clone()
                };
                specs.push(ScenarioSpec::new(params, base_seed));
            }
        }
    }
    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem(n: usize) -> Memory {
        Memory::bounded(n).unwrap()
    }

    #[test]
    fn table4_grid_has_48_scenarios() {
        let m = [mem(1), mem(3), mem(5), Memory::Unbounded];
        let specs = expand_grid(&m, &m, &[0.05, 0.25, 0.45], &ModelParams::default(), 1);
        assert_eq!(specs.len(), 48);
        assert_eq!(specs[0].scenario_id, "mp1_ma1_s0.05");
        assert_eq!(specs[1].scenario_id, "mp1_ma1_s0.25");
        assert_eq!(specs[3].scenario_id, "mp1_ma3_s0.05");
        assert_eq!(specs[47].scenario_id, "mpinf_mainf_s0.45");
        let mut ids: Vec<_> = specs.iter().map(|s| s.scenario_id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 48);
    }

    #[test]
    fn single_point_grid() {
        let specs = expand_grid(&[mem(1)], &[mem(1)], &[0.05], &ModelParams::default(), 1);
        assert_eq!(specs.len(), 1);
    }

    #[test]
    fn one_period_round_starts_from_prior() {
        let params = ModelParams::<f64> {
            timesteps: 1,
            ..Default::default()
        };
        let spec = ScenarioSpec::new(params, 5);
        let bench = solve_second_best(0.5);
        let r = run_round(&spec, 0, &bench);
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.steps[0].belief_principal, 0.0);
        assert_eq!(r.steps[0].belief_agent, 0.0);
        assert_eq!(r.steps[0].t, 1);
    }

    #[test]
    fn three_rounds_three_seeds() {
        let params = ModelParams::<f64> {
            rounds: 3,
            ..Default::default()
        };
        let spec = ScenarioSpec::new(params, 5);
        let rounds = run_scenario(&spec);
        assert_eq!(rounds.len(), 3);
        assert_ne!(rounds[0].seed, rounds[1].seed);
        assert_ne!(rounds[1].seed, rounds[2].seed);
        assert_ne!(rounds[0].seed, rounds[2].seed);
    }
}
