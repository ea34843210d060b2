//! Run configuration: TOML on disk, defaults reproducing the published study grid.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use hal_core::{Memory, Params};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}, expected csv or json")),
        }
    }
}

/// Worker threads for the round fan-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    #[default]
    Auto,
    Fixed(usize),
}

impl Workers {
    /// Thread count for a rayon pool; 0 lets rayon decide.
    pub fn threads(self) -> usize {
        match self {
            Workers::Auto => 0,
            Workers::Fixed(n) => n,
        }
    }
}

impl fmt::Display for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Workers::Auto => f.write_str("auto"),
            Workers::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Workers {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Workers::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Workers::Fixed(n)),
            _ => Err(format!(
                "invalid worker count {s:?}, expected a positive integer or \"auto\""
            )),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WorkersRepr {
    Count(u64),
    Word(String),
}

impl Serialize for Workers {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Workers::Auto => WorkersRepr::Word("auto".into()).serialize(serializer),
            Workers::Fixed(n) => WorkersRepr::Count(*n as u64).serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Workers {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        match WorkersRepr::deserialize(deserializer)? {
            WorkersRepr::Count(n) => Workers::from_str(&n.to_string()),
            WorkersRepr::Word(w) => Workers::from_str(&w),
        }
        .map_err(serde::de::Error::custom)
    }
}

fn default_memories() -> Vec<Memory> {
    vec![
        Memory::bounded(1).unwrap(),
        Memory::bounded(3).unwrap(),
        Memory::bounded(5).unwrap(),
        Memory::Unbounded,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub eta: f64,
    pub mu: f64,
    pub timesteps: usize,
    pub rounds: usize,
    pub reservation_utility: f64,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub workers: Workers,
    /// Principal memory grid.
    pub memory_principal: Vec<Memory>,
    /// Agent memory grid.
    pub memory_agent: Vec<Memory>,
    /// Noise grid, as fractions of the benchmark outcome.
    pub sigma_frac: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eta: 0.5,
            mu: 0.0,
            timesteps: 20,
            rounds: 700,
            reservation_utility: 0.0,
            base_seed: 20_220_101,
            output_dir: PathBuf::from("results"),
            format: Format::Csv,
            workers: Workers::Auto,
            memory_principal: default_memories(),
            memory_agent: default_memories(),
            sigma_frac: vec![0.05, 0.25, 0.45],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            bail!(
                "invalid config key `eta`: must be a positive number, got {}",
                self.eta
            );
        }
        if !self.mu.is_finite() {
            bail!("invalid config key `mu`: must be finite");
        }
        if self.timesteps == 0 {
            bail!("invalid config key `timesteps`: must be at least 1");
        }
        if self.rounds == 0 {
            bail!("invalid config key `rounds`: must be at least 1");
        }
        if !self.reservation_utility.is_finite() {
            bail!("invalid config key `reservation_utility`: must be finite");
        }
        if self.memory_principal.is_empty() {
            bail!("invalid config key `memory_principal`: grid must not be empty");
        }
        if self.memory_agent.is_empty() {
            bail!("invalid config key `memory_agent`: grid must not be empty");
        }
        if self.sigma_frac.is_empty() {
            bail!("invalid config key `sigma_frac`: grid must not be empty");
        }
        if let Some(bad) = self
            .sigma_frac
            .iter()
            .find(|s| !(**s >= 0.0 && s.is_finite()))
        {
            bail!("invalid config key `sigma_frac`: entries must be non-negative, got {bad}");
        }
        Ok(())
    }

    /// Model constants shared by every scenario of the grid.
    pub fn constants(&self) -> Params {
        Params {
            eta: self.eta,
            mu: self.mu,
            timesteps: self.timesteps,
            rounds: self.rounds,
            reservation_utility: self.reservation_utility,
            ..Params::default()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing configuration")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config file {}", path.display()))
}
