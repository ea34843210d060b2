//! Command-line surface.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hal_core::stats::{
    normalized_traces, DEFAULT_CV_THRESHOLD, DEFAULT_CV_WINDOW_STEP, DEFAULT_PERMUTATIONS,
};
use hal_core::{cv_stabilization, run_scenario_with, solve_second_best, CvReport, Memory, Metric};
use serde::Serialize;

use crate::config::{load_config, Format, RunConfig, Workers};
use crate::output::{self, emit_results, preflight, Manifest, MANIFEST_FILE, TRACES_FILE};
use crate::study::{
    grid_specs, memory_comparisons, run_study, study_comparisons, with_workers, DistanceRow,
};

/// Rounds simulated by `cv` unless `--rounds` is given.
pub const CV_DEFAULT_ROUNDS: usize = 2000;

#[derive(Debug, Parser)]
#[command(
    name = "hal",
    version,
    about = "Agent-based hidden-action model with memory-limited principal and agent"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; omitted keys take the study defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "HAL_SEED", value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub rounds: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub timesteps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "csv|json")]
    pub format: Option<Format>,
    #[arg(long, global = true, value_name = "N|auto")]
    pub workers: Option<Workers>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the second-best contract for a risk aversion.
    Benchmark {
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Simulate one scenario.
    Run(ScenarioArgs),
    /// Simulate the full grid and the memory comparisons.
    Sweep,
    /// Recompute distances and significance from a results directory.
    Stats {
        /// Results directory; defaults to the output directory.
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        permutations: usize,
    },
    /// Report how the coefficient of variation settles with the number of rounds.
    Cv {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = DEFAULT_CV_WINDOW_STEP)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_CV_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = Metric::UtilityAgent)]
        metric: Metric,
        /// Period whose value is taken per round; defaults to the last one.
        #[arg(long)]
        period: Option<usize>,
    },
}

#[derive(Debug, Args, Clone)]
pub struct ScenarioArgs {
    /// Defaults to the first entry of the configured grid.
    #[arg(long)]
    pub memory_principal: Option<Memory>,
    #[arg(long)]
    pub memory_agent: Option<Memory>,
    #[arg(long)]
    pub sigma_frac: Option<f64>,
}

impl GlobalArgs {
    /// Config file, then flags (`--seed` before `HAL_SEED`), then validation.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.base_seed = seed;
        }
        if let Some(rounds) = self.rounds {
            config.rounds = rounds;
        }
        if let Some(t) = self.timesteps {
            config.timesteps = t;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(format) = self.format {
            config.format = format;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        config.validate()?;
        Ok(config)
    }
}

impl ScenarioArgs {
    fn narrow(&self, config: &mut RunConfig, sigma_default: Option<f64>) {
        config.memory_principal = vec![self.memory_principal.unwrap_or(config.memory_principal[0])];
        config.memory_agent = vec![self.memory_agent.unwrap_or(config.memory_agent[0])];
        let sf = self
            .sigma_frac
            .or(sigma_default)
            .unwrap_or(config.sigma_frac[0]);
        config.sigma_frac = vec![sf];
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut config = cli.global.resolve()?;
    match cli.command {
        Command::Benchmark { eta } => benchmark(eta.unwrap_or(config.eta)),
        Command::Run(scenario) => {
            scenario.narrow(&mut config, None);
            config.validate()?;
            simulate(&config)
        }
        Command::Sweep => simulate(&config),
        Command::Stats { dir, permutations } => {
            let dir = dir.unwrap_or_else(|| config.output_dir.clone());
            stats(&dir, cli.global.format, cli.global.seed, permutations)
        }
        Command::Cv {
            scenario,
            window,
            threshold,
            metric,
            period,
        } => {
            let one = Memory::bounded(1).unwrap();
            let scenario = ScenarioArgs {
                memory_principal: scenario.memory_principal.or(Some(one)),
                memory_agent: scenario.memory_agent.or(Some(one)),
                sigma_frac: scenario.sigma_frac,
            };
            scenario.narrow(&mut config, Some(0.25));
            if cli.global.rounds.is_none() {
                config.rounds = CV_DEFAULT_ROUNDS;
            }
            config.validate()?;
            let report = cv(&config, metric, period, window, threshold)?;
            print_cv(&report);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BenchmarkReport {
    eta: f64,
    premium_star: f64,
    effort_star: f64,
    outcome_star: f64,
    utility_principal_star: f64,
    utility_agent_star: f64,
}

fn benchmark(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        bail!("invalid value for `eta`: must be a positive number, got {eta}");
    }
    let b = solve_second_best(eta);
    let report = BenchmarkReport {
        eta,
        premium_star: b.premium_star,
        effort_star: b.effort_star,
        outcome_star: b.outcome_star,
        utility_principal_star: b.utility_principal_star,
        utility_agent_star: b.utility_agent_star,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn simulate(config: &RunConfig) -> Result<()> {
    preflight(&config.output_dir)?;
    let specs = grid_specs(config);
    log::info!(
        "simulating {} scenario(s), {} rounds each",
        specs.len(),
        config.rounds
    );
    let study = run_study(specs, config.eta, config.workers)?;
    let distances = with_workers(config.workers, || {
        study_comparisons(&study, config.base_seed)
    })??;
    emit_results(&study, &distances, config)?;

    let t = config.timesteps - 1;
    println!(
        "scenario            premium   effort    U_P       U_A       (normalized, t={})",
        t + 1
    );
    for s in &study.scenarios {
        println!(
            "{:<19} {:<9.4} {:<9.4} {:<9.4} {:<9.4}",
            s.spec.scenario_id,
            s.series(Metric::Premium).values[t],
            s.series(Metric::Effort).values[t],
            s.series(Metric::UtilityPrincipal).values[t],
            s.series(Metric::UtilityAgent).values[t],
        );
    }
    print_distances(&distances);
    println!("results written to {}", config.output_dir.display());
    Ok(())
}

fn print_distances(rows: &[DistanceRow]) {
    if rows.is_empty() {
        return;
    }
    println!("\nagent utility, memory 1 -> 5");
    for r in rows {
        println!(
            "{:<14} {:<18} {:>8.4}  p={:.4}",
            r.environment, r.comparison, r.distance, r.p_value
        );
    }
}

fn stats(dir: &Path, format: Option<Format>, seed: Option<u64>, permutations: usize) -> Result<()> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )
    .with_context(|| format!("parsing {}", manifest_path.display()))?;
    let traces_path = dir.join(TRACES_FILE);
    let groups = output::parse_traces(
        &std::fs::read_to_string(&traces_path)
            .with_context(|| format!("reading {}", traces_path.display()))?,
    )?;
    let base_seed = seed.unwrap_or(manifest.base_seed);
    let rows = with_workers(manifest.config.workers, || {
        memory_comparisons(&groups, base_seed, permutations)
    })??;
    let name = output::write_distances(dir, format.unwrap_or(manifest.config.format), &rows)?;
    print_distances(&rows);
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

/// Simulates the single scenario of `config` and computes the CV report of
/// `metric` at `period` (1-based, default last).
pub fn cv(
    config: &RunConfig,
    metric: Metric,
    period: Option<usize>,
    window: usize,
    threshold: f64,
) -> Result<CvReport> {
    preflight(&config.output_dir)?;
    let period = period.unwrap_or(config.timesteps);
    if period == 0 || period > config.timesteps {
        bail!(
            "invalid value for `period`: must be in 1..={}, got {period}",
            config.timesteps
        );
    }
    let mut spec = grid_specs(config).remove(0);
    let benchmark = solve_second_best(config.eta);
    spec.params.resolve_sigma(&benchmark);
    let rounds = with_workers(config.workers, || run_scenario_with(&spec, &benchmark))?;
    let traces = normalized_traces(&rounds, metric, &benchmark)?;
    let values: Vec<f64> = traces.iter().map(|t| t[period - 1]).collect();
    let report = cv_stabilization(&values, window, threshold)?;

    #[derive(Serialize)]
    struct CvFile<'a> {
        scenario_id: &'a str,
        metric: Metric,
        period: usize,
        base_seed: u64,
        #[serde(flatten)]
        report: &'a CvReport,
    }
    let body = serde_json::to_string_pretty(&CvFile {
        scenario_id: &spec.scenario_id,
        metric,
        period,
        base_seed: config.base_seed,
        report: &report,
    })? + "\n";
    let path = config.output_dir.join("cv.json");
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{} {metric} at t={period}, {} rounds",
        spec.scenario_id, config.rounds
    );
    Ok(report)
}

fn print_cv(report: &CvReport) {
    for p in &report.points {
        match p.cv {
            Some(cv) => println!("{:>6}  {cv:.6}", p.rounds),
            None => println!("{:>6}  undefined", p.rounds),
        }
    }
    match report.stabilizing_rounds {
        Some(r) => println!(
            "stabilizes at {r} rounds (window {}, threshold {})",
            report.window_step, report.threshold
        ),
        None => println!(
            "does not stabilize (window {}, threshold {})",
            report.window_step, report.threshold
        ),
    }
}
