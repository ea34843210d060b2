//! Result persistence: long-form series, benchmark, distances, per-round agent
//! traces and a checksummed manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hal_core::engine::scenario_id;
use hal_core::{Bench, Memory, Metric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::study::{DistanceRow, ScenarioSummary, StudyOutput, TraceGroup};

pub const SERIES_HEADER: &str = "scenario_id,m_p,m_a,sigma_frac,t,metric,mean,ci_low,ci_high";
pub const DISTANCES_HEADER: &str = "environment,comparison,metric,distance,p_value";
pub const TRACES_FILE: &str = "agent_utility_rounds.csv";
const TRACES_HEADER: &str = "scenario_id,m_p,m_a,sigma_frac,round,t,value";
pub const MANIFEST_FILE: &str = "manifest.json";

/// 17 significant digits, locale independent.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Fails unless `dir` can be created and written to.
pub fn preflight(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let probe = dir.join(".hal-write-probe");
    fs::write(&probe, b"")
        .with_context(|| format!("output directory {} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub scenario_id: String,
    pub m_p: Memory,
    pub m_a: Memory,
    pub sigma_frac: f64,
    pub t: usize,
    pub metric: Metric,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn series_rows(scenarios: &[ScenarioSummary]) -> Vec<SeriesRow> {
    let mut rows = Vec::new();
    for s in scenarios {
        let p = &s.spec.params;
        let periods = s.series.first().map_or(0, |x| x.len());
        for t in 0..periods {
            for series in &s.series {
                rows.push(SeriesRow {
                    scenario_id: s.spec.scenario_id.clone(),
                    m_p: p.memory_principal,
                    m_a: p.memory_agent,
                    sigma_frac: p.sigma_frac,
                    t: t + 1,
                    metric: series.metric,
                    mean: series.values[t],
                    ci_low: series.ci_low[t],
                    ci_high: series.ci_high[t],
                });
            }
        }
    }
    rows
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 120);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.m_p,
            r.m_a,
            fmt_num(r.sigma_frac),
            r.t,
            r.metric,
            fmt_num(r.mean),
            fmt_num(r.ci_low),
            fmt_num(r.ci_high)
        );
    }
    out
}

pub fn distances_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from(DISTANCES_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.environment,
            r.comparison,
            r.metric,
            fmt_num(r.distance),
            fmt_num(r.p_value)
        );
    }
    out
}

pub fn traces_csv(groups: &[TraceGroup]) -> String {
    let mut out = String::from(TRACES_HEADER);
    out.push('\n');
    for g in groups {
        let id = scenario_id(g.memory_principal, g.memory_agent, g.sigma_frac);
        for (r, trace) in g.traces.iter().enumerate() {
            for (t, v) in trace.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{id},{},{},{},{r},{},{}",
                    g.memory_principal,
                    g.memory_agent,
                    fmt_num(g.sigma_frac),
                    t + 1,
                    fmt_num(*v)
                );
            }
        }
    }
    out
}

/// Reads back the per-round agent traces written by [`traces_csv`].
pub fn parse_traces(text: &str) -> Result<Vec<TraceGroup>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACES_HEADER => {}
        _ => bail!("{TRACES_FILE}: unexpected header"),
    }
    let mut groups: Vec<TraceGroup> = Vec::new();
    for (n, line) in lines.enumerate() {
        let ctx = || format!("{TRACES_FILE} line {}", n + 2);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            bail!("{}: expected 7 fields, got {}", ctx(), f.len());
        }
        let mp: Memory = f[1].parse().map_err(anyhow::Error::msg).with_context(ctx)?;
        let ma: Memory = f[2].parse().map_err(anyhow::Error::msg).with_context(ctx)?;
        let sf: f64 = f[3].parse().with_context(ctx)?;
        let round: usize = f[4].parse().with_context(ctx)?;
        let value: f64 = f[6].parse().with_context(ctx)?;
        let fresh = groups
            .last()
            .is_none_or(|g| g.memory_principal != mp || g.memory_agent != ma || g.sigma_frac != sf);
        if fresh {
            groups.push(TraceGroup {
                memory_principal: mp,
                memory_agent: ma,
                sigma_frac: sf,
                traces: Vec::new(),
            });
        }
        let g = groups.last_mut().unwrap();
        if round == g.traces.len() {
            g.traces.push(Vec::new());
        } else if round + 1 != g.traces.len() {
            bail!("{}: rounds out of order", ctx());
        }
        g.traces[round].push(value);
    }
    Ok(groups)
}

#[derive(Debug, Serialize)]
struct SigmaEntry<'a> {
    scenario_id: &'a str,
    sigma_frac: f64,
    sigma: f64,
}

#[derive(Debug, Serialize)]
struct BenchmarkFile<'a> {
    eta: f64,
    #[serde(flatten)]
    benchmark: &'a Bench,
    resolved_sigma: Vec<SigmaEntry<'a>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub base_seed: u64,
    pub config: RunConfig,
    /// File name to lowercase hex SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes the distance table and refreshes its manifest checksum.
pub fn write_distances(dir: &Path, format: Format, rows: &[DistanceRow]) -> Result<String> {
    let name = format!("distances.{}", format.extension());
    let body = match format {
        Format::Csv => distances_csv(rows),
        Format::Json => to_json(rows)?,
    };
    write_file(dir, &name, body.as_bytes())?;
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path)?;
        let mut manifest: Manifest =
            serde_json::from_str(&text).context("parsing manifest.json")?;
        manifest
            .artifacts
            .insert(name.clone(), sha256_hex(body.as_bytes()));
        write_file(dir, MANIFEST_FILE, to_json(&manifest)?.as_bytes())?;
    }
    Ok(name)
}

/// Writes every artifact of a finished study into `config.output_dir`.
pub fn emit_results(
    study: &StudyOutput,
    distances: &[DistanceRow],
    config: &RunConfig,
) -> Result<()> {
    let dir = config.output_dir.as_path();
    let ext = config.format.extension();
    let mut artifacts = BTreeMap::new();
    let mut put = |name: String, body: String| -> Result<()> {
        write_file(dir, &name, body.as_bytes())?;
        artifacts.insert(name, sha256_hex(body.as_bytes()));
        Ok(())
    };

    let rows = series_rows(&study.scenarios);
    let series = match config.format {
        Format::Csv => series_csv(&rows),
        Format::Json => to_json(&rows)?,
    };
    put(format!("series.{ext}"), series)?;

    let bench = BenchmarkFile {
        eta: config.eta,
        benchmark: &study.benchmark,
        resolved_sigma: study
            .scenarios
            .iter()
            .map(|s| SigmaEntry {
                scenario_id: &s.spec.scenario_id,
                sigma_frac: s.spec.params.sigma_frac,
                sigma: s.spec.params.sigma,
            })
            .collect(),
    };
    put("benchmark.json".into(), to_json(&bench)?)?;

    let distances_body = match config.format {
        Format::Csv => distances_csv(distances),
        Format::Json => to_json(distances)?,
    };
    put(format!("distances.{ext}"), distances_body)?;

    let groups: Vec<TraceGroup> = study.scenarios.iter().map(|s| s.agent.clone()).collect();
    put(TRACES_FILE.into(), traces_csv(&groups))?;
    put("config.toml".into(), config.to_toml()?)?;

    let manifest = Manifest {
        base_seed: config.base_seed,
        config: config.clone(),
        artifacts,
    };
    write_file(dir, MANIFEST_FILE, to_json(&manifest)?.as_bytes())?;
    Ok(())
}
