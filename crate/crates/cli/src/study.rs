//! Grid execution and aggregation: per-scenario normalized series, per-round
//! agent-utility traces, and the memory comparison distances.

use anyhow::{Context, Result};
use hal_core::rng::round_seed;
use hal_core::stats::{mean_band, normalized_traces, DEFAULT_PERMUTATIONS};
use hal_core::{
    euclidean_distance, expand_grid, normalize_series, run_scenario_with, significance_test,
    solve_second_best, Bench, Memory, Metric, Round, Series, Spec,
};
use serde::Serialize;

use crate::config::{RunConfig, Workers};

/// Per-round normalized agent-utility traces of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceGroup {
    pub memory_principal: Memory,
    pub memory_agent: Memory,
    pub sigma_frac: f64,
    pub traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ScenarioSummary {
    pub spec: Spec,
    /// One series per metric, in [`Metric::ALL`] order.
    pub series: Vec<Series>,
    pub agent: TraceGroup,
    pub rejections: usize,
}

impl ScenarioSummary {
    pub fn series(&self, metric: Metric) -> &Series {
        self.series
            .iter()
            .find(|s| s.metric == metric)
            .expect("all metrics summarized")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub environment: String,
    pub comparison: String,
    pub metric: Metric,
    pub distance: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub benchmark: Bench,
    pub scenarios: Vec<ScenarioSummary>,
}

pub fn grid_specs(config: &RunConfig) -> Vec<Spec> {
    expand_grid(
        &config.memory_principal,
        &config.memory_agent,
        &config.sigma_frac,
        &config.constants(),
        config.base_seed,
    )
}

/// Runs `f` on a dedicated pool with the configured number of workers.
pub fn with_workers<T: Send>(workers: Workers, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.threads())
        .build()
        .context("building worker pool")?;
    Ok(pool.install(f))
}

pub fn summarize(spec: Spec, rounds: &[Round], benchmark: &Bench) -> Result<ScenarioSummary> {
    let series = Metric::ALL
        .iter()
        .map(|&m| normalize_series(rounds, m, benchmark))
        .collect::<hal_core::Result<Vec<_>>>()?;
    let traces = normalized_traces(rounds, Metric::UtilityAgent, benchmark)?;
    let rejections = rounds.iter().map(|r| r.rejections).sum();
    Ok(ScenarioSummary {
        agent: TraceGroup {
            memory_principal: spec.params.memory_principal,
            memory_agent: spec.params.memory_agent,
            sigma_frac: spec.params.sigma_frac,
            traces,
        },
        spec,
        series,
        rejections,
    })
}

/// Simulates every scenario in `specs` and aggregates each as soon as its rounds finish.
pub fn run_study(specs: Vec<Spec>, eta: f64, workers: Workers) -> Result<StudyOutput> {
    let benchmark = solve_second_best(eta);
    let scenarios = with_workers(workers, || {
        specs
            .into_iter()
            .map(|mut spec| {
                spec.params.resolve_sigma(&benchmark);
                let rounds = run_scenario_with(&spec, &benchmark);
                log::info!(
                    "{}: {} rounds, {} periods without contract",
                    spec.scenario_id,
                    rounds.len(),
                    rounds.iter().map(|r| r.rejections).sum::<usize>()
                );
                summarize(spec, &rounds, &benchmark)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(StudyOutput {
        benchmark,
        scenarios,
    })
}

pub fn environment_label(sigma_frac: f64) -> String {
    const NAMED: [(f64, &str); 3] = [
        (0.05, "stable"),
        (0.25, "mid-turbulent"),
        (0.45, "turbulent"),
    ];
    NAMED
        .iter()
        .find(|(s, _)| (s - sigma_frac).abs() < 1e-12)
        .map(|(_, name)| name.to_string())
        .unwrap_or_else(|| format!("sigma_frac={sigma_frac}"))
}

fn same_sigma(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Agent-utility comparisons for memory 1 -> 5 of either actor, holding the
/// other actor's memory at 1 and at 5, in every noise environment present.
pub fn memory_comparisons(
    groups: &[TraceGroup],
    base_seed: u64,
    permutations: usize,
) -> Result<Vec<DistanceRow>> {
    let one = Memory::bounded(1).unwrap();
    let five = Memory::bounded(5).unwrap();
    let mut sigmas: Vec<f64> = Vec::new();
    for g in groups {
        if !sigmas.iter().any(|&s| same_sigma(s, g.sigma_frac)) {
            sigmas.push(g.sigma_frac);
        }
    }
    let find = |mp: Memory, ma: Memory, sf: f64| {
        groups.iter().find(|g| {
            g.memory_principal == mp && g.memory_agent == ma && same_sigma(g.sigma_frac, sf)
        })
    };

    let mut rows = Vec::new();
    for &sf in &sigmas {
        let environment = environment_label(sf);
        let pairs = [
            ("m_P 1->5 @ m_A=1".to_string(), (one, one), (five, one)),
            ("m_P 1->5 @ m_A=5".to_string(), (one, five), (five, five)),
            ("m_A 1->5 @ m_P=1".to_string(), (one, one), (one, five)),
            ("m_A 1->5 @ m_P=5".to_string(), (five, one), (five, five)),
        ];
        for (comparison, (mp_a, ma_a), (mp_b, ma_b)) in pairs {
            let (Some(a), Some(b)) = (find(mp_a, ma_a, sf), find(mp_b, ma_b, sf)) else {
                continue;
            };
            let (mean_a, _, _) = mean_band(&a.traces)?;
            let (mean_b, _, _) = mean_band(&b.traces)?;
            let distance = euclidean_distance(&mean_a, &mean_b)?;
            let seed = round_seed(base_seed, &format!("{environment}/{comparison}"), 0);
            let p_value = significance_test(&a.traces, &b.traces, permutations, seed)?;
            rows.push(DistanceRow {
                environment: environment.clone(),
                comparison,
                metric: Metric::UtilityAgent,
                distance,
                p_value,
            });
        }
    }
    Ok(rows)
}

pub fn study_comparisons(study: &StudyOutput, base_seed: u64) -> Result<Vec<DistanceRow>> {
    let groups: Vec<TraceGroup> = study.scenarios.iter().map(|s| s.agent.clone()).collect();
    memory_comparisons(&groups, base_seed, DEFAULT_PERMUTATIONS)
}
