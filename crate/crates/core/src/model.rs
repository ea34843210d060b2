//! Domain types of the hidden-action model and the per-period evaluation
//! functions for outcome, compensation and both actors' utilities.

use std::collections::VecDeque;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HalError, Result};
use crate::scalar::Scalar;

/// Capacity of an actor's memory: a fixed number of entries or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Memory {
    Bounded(NonZeroUsize),
    Unbounded,
}

impl Memory {
    /// Bounded memory of `n` entries; `None` when `n == 0`.
    pub fn bounded(n: usize) -> Option<Self> {
        NonZeroUsize::new(n).map(Memory::Bounded)
    }

    pub fn capacity(self) -> Option<usize> {
        match self {
            Memory::Bounded(n) => Some(n.get()),
            Memory::Unbounded => None,
        }
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Memory::Bounded(n) => write!(f, "{n}"),
            Memory::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Memory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Memory::Unbounded);
        }
        let n: usize = s.parse().map_err(|_| {
            format!("invalid memory capacity {s:?}, expected a positive integer or \"inf\"")
        })?;
        Memory::bounded(n).ok_or_else(|| "memory capacity must be at least 1".to_string())
    }
}

impl Serialize for Memory {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        match self {
            Memory::Bounded(n) => serializer.serialize_u64(n.get() as u64),
            Memory::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Memory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = Memory;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Memory, E> {
                Memory::bounded(v as usize)
                    .ok_or_else(|| E::custom("memory capacity must be at least 1"))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Memory, E> {
                if v < 1 {
                    return Err(E::custom("memory capacity must be at least 1"));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Memory, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// Exogenous constants of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<S> {
    /// Arrow-Pratt coefficient of the agent.
    pub eta: S,
    /// Mean of the exogenous factor.
    pub mu: S,
    /// Standard deviation of the exogenous factor relative to the benchmark outcome.
    pub sigma_frac: S,
    /// Absolute standard deviation, set by [`ModelParams::resolve_sigma`].
    pub sigma: S,
    pub memory_principal: Memory,
    pub memory_agent: Memory,
    pub timesteps: usize,
    pub rounds: usize,
    pub reservation_utility: S,
}

impl<S: Scalar> Default for ModelParams<S> {
    fn default() -> Self {
        ModelParams {
            eta: S::lit(0.5),
            mu: S::zero(),
            sigma_frac: S::lit(0.05),
            sigma: S::zero(),
            memory_principal: Memory::bounded(1).unwrap(),
            memory_agent: Memory::bounded(1).unwrap(),
            timesteps: 20,
            rounds: 700,
            reservation_utility: S::zero(),
        }
    }
}

impl<S: Scalar> ModelParams<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > S::zero()) || !self.eta.is_finite() {
            return Err(domain("eta", self.eta, "must be a positive finite number"));
        }
        if !self.mu.is_finite() {
            return Err(domain("mu", self.mu, "must be finite"));
        }
        if !(self.sigma_frac >= S::zero()) || !self.sigma_frac.is_finite() {
            return Err(domain(
                "sigma_frac",
                self.sigma_frac,
                "must be non-negative",
            ));
        }
        if !(self.sigma >= S::zero()) || !self.sigma.is_finite() {
            return Err(domain("sigma", self.sigma, "must be non-negative"));
        }
        if self.timesteps == 0 {
            return Err(domain("timesteps", S::zero(), "must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(domain("rounds", S::zero(), "must be at least 1"));
        }
        if !self.reservation_utility.is_finite() {
            return Err(domain(
                "reservation_utility",
                self.reservation_utility,
                "must be finite",
            ));
        }
        Ok(())
    }

    /// Sets the absolute noise level from the benchmark outcome.
    pub fn resolve_sigma(&mut self, benchmark: &Benchmark<S>) {
        self.sigma = self.sigma_frac * benchmark.outcome_star;
    }
}

/// Bounded FIFO store of exogenous-factor estimates, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBuffer<S> {
    capacity: Memory,
    entries: VecDeque<S>,
}

impl<S: Scalar> MemoryBuffer<S> {
    pub fn new(capacity: Memory) -> Self {
        let reserve = capacity.capacity().unwrap_or(32);
        MemoryBuffer {
            capacity,
            entries: VecDeque::with_capacity(reserve + 1),
        }
    }

    pub fn capacity(&self) -> Memory {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = S> + '_ {
        self.entries.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.entries.iter().copied().collect()
    }

    /// Appends `value`, evicting the oldest entry when over capacity.
    pub fn push(&mut self, value: S) {
        self.entries.push_back(value);
        if let Some(cap) = self.capacity.capacity() {
            while self.entries.len() > cap {
                self.entries.pop_front();
            }
        }
    }
}

/// The offer made in one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract<S> {
    /// Agent's share of the outcome.
    pub premium: S,
    /// Effort the premium is designed to induce.
    pub incited_effort: S,
}

impl<S: Scalar> Contract<S> {
    pub fn new(premium: S, incited_effort: S) -> Result<Self> {
        check_premium(premium)?;
        if !(incited_effort >= S::zero()) {
            return Err(domain(
                "incited_effort",
                incited_effort,
                "must be non-negative",
            ));
        }
        Ok(Contract {
            premium,
            incited_effort,
        })
    }
}

/// Realized quantities of one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<S> {
    pub t: usize,
    pub effort: S,
    pub theta: S,
    pub outcome: S,
    pub compensation: S,
    pub utility_principal: S,
    pub utility_agent: S,
    pub accepted: bool,
    pub premium: S,
    pub incited_effort: S,
    pub belief_principal: S,
    pub belief_agent: S,
}

/// Second-best reference point used for normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benchmark<S> {
    pub premium_star: S,
    pub effort_star: S,
    pub outcome_star: S,
    pub utility_principal_star: S,
    pub utility_agent_star: S,
}

/// Production function: effort plus the exogenous factor.
#[inline]
pub fn outcome<S: Scalar>(effort: S, theta: S) -> S {
    effort + theta
}

/// Agent's share of `outcome` under `premium`.
#[inline]
pub fn compensation<S: Scalar>(outcome: S, premium: S) -> S {
    outcome * premium
}

/// Principal's (risk-neutral) utility: outcome net of the agent's share.
pub fn principal_utility<S: Scalar>(outcome: S, premium: S) -> Result<S> {
    check_premium(premium)?;
    Ok(outcome - compensation(outcome, premium))
}

/// CARA utility of compensation minus quadratic disutility of effort.
///
/// Uses `expm1` so the risk-neutral limit `eta -> 0` stays accurate.
#[inline]
pub fn agent_utility<S: Scalar>(compensation: S, effort: S, eta: S) -> S {
    -(-eta * compensation).exp_m1() / eta - effort * effort / S::lit(2.0)
}

pub(crate) fn check_premium<S: Scalar>(premium: S) -> Result<()> {
    if premium >= S::zero() && premium <= S::one() {
        Ok(())
    } else {
        Err(domain("premium", premium, "must lie in [0, 1]"))
    }
}

pub(crate) fn domain<S: Scalar>(name: &'static str, value: S, reason: &'static str) -> HalError {
    HalError::Domain {
        name,
        value: value.to_f64_lossy(),
        reason,
    }
}
