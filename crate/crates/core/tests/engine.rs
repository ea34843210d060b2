use hal_core::engine::RoundState;
use hal_core::{
    best_response, estimate_exogenous, expand_grid, observe_exogenous, run_round, run_scenario,
    run_scenario_with, solve_second_best, Memory, Params, Spec,
};

fn spec(mp: Memory, ma: Memory, sigma_frac: f64, rounds: usize) -> Spec {
    let params = Params {
        memory_principal: mp,
        memory_agent: ma,
        sigma_frac,
        rounds,
        ..Params::default()
    };
    Spec::new(params, 99)
}

fn m(n: usize) -> Memory {
    Memory::bounded(n).unwrap()
}

#[test]
fn rounds_are_bitwise_reproducible() {
    let bench = solve_second_best(0.5);
    let s = spec(m(3), Memory::Unbounded, 0.45, 4);
    for r in 0..4 {
        let a = run_round(&s, r, &bench);
        let b = run_round(&s, r, &bench);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn round_order_does_not_matter() {
    let bench = solve_second_best(0.5);
    let s = spec(m(1), m(5), 0.25, 12);
    let forward = run_scenario_with(&s, &bench);
    let mut backward: Vec<_> = (0..12).rev().map(|r| run_round(&s, r, &bench)).collect();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn noiseless_single_memory_stays_at_prior() {
    let bench = solve_second_best(0.5);
    let rounds = run_scenario(&spec(m(1), m(1), 0.0, 25));
    for round in &rounds {
        assert_eq!(round.steps.len(), 20);
        for step in &round.steps {
            assert_eq!(step.theta, 0.0);
            // Effort matches the incited effort up to root-finding tolerance.
            assert!(step.belief_principal.abs() < 1e-8);
            assert_eq!(step.belief_agent, 0.0);
            assert!(step.accepted);
        }
        for pair in round.steps.windows(2) {
            assert!(pair[1].utility_principal >= pair[0].utility_principal - 1e-12);
        }
        // Draws land on both sides of a*, so the final effort is only bounded
        // by the action space; the principal's utility is bounded by U_P*.
        let last = round.steps.last().unwrap();
        assert!(last.effort >= 0.0 && last.effort <= best_response(1.0, 0.0, 0.5));
        assert!(last.utility_principal <= bench.utility_principal_star + 1e-12);
    }
}

#[test]
fn traces_satisfy_accounting_and_memory_windows() {
    let bench = solve_second_best(0.5);
    for (mp, ma) in [
        (m(1), m(3)),
        (m(5), Memory::Unbounded),
        (Memory::Unbounded, m(1)),
    ] {
        let s = spec(mp, ma, 0.45, 1);
        for r in 0..30 {
            let mut state = RoundState::new(&s, r, &bench);
            let mut principal_seen = Vec::new();
            let mut agent_seen = Vec::new();
            for t in 1..=20usize {
                let cap = |mem: Memory, len: usize| mem.capacity().map_or(len, |c| len.min(c));
                let tail = |v: &Vec<f64>, n: usize| v[v.len() - n..].to_vec();
                assert_eq!(
                    state.principal_memory().to_vec(),
                    tail(&principal_seen, cap(mp, principal_seen.len()))
                );
                assert_eq!(
                    state.agent_memory().to_vec(),
                    tail(&agent_seen, cap(ma, agent_seen.len()))
                );

                let step = state.step();
                assert_eq!(step.t, t);
                if step.accepted {
                    let residual = step.utility_principal + step.compensation - step.outcome;
                    assert!(residual.abs() <= 4.0 * f64::EPSILON * step.outcome.abs().max(1.0));
                    assert_eq!(step.outcome, step.effort + step.theta);
                    principal_seen.push(estimate_exogenous(step.outcome, step.incited_effort));
                    agent_seen.push(observe_exogenous(step.outcome, step.effort));
                } else {
                    assert_eq!(step.effort, 0.0);
                    assert_eq!(step.utility_principal, 0.0);
                    agent_seen.push(step.theta);
                }
            }
        }
    }
}

#[test]
fn full_scenario_record_count() {
    let bench = solve_second_best(0.5);
    let s = spec(m(5), m(5), 0.05, 700);
    let rounds = run_scenario_with(&s, &bench);
    assert_eq!(rounds.len(), 700);
    assert_eq!(
        rounds.iter().map(|r| r.steps.len()).sum::<usize>(),
        700 * 20
    );
}

#[test]
fn default_grid_has_distinct_ids() {
    let mems = [m(1), m(3), m(5), Memory::Unbounded];
    let specs = expand_grid(&mems, &mems, &[0.05, 0.25, 0.45], &Params::default(), 7);
    let mut ids: Vec<_> = specs.iter().map(|s| s.scenario_id.clone()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 48);
}
