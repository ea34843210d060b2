//! Benchmark-normalized time series with 99% bands, curve distances, a
//! permutation test on curve distance, and run-count calibration by the
//! coefficient of variation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::RoundResult;
use crate::error::{HalError, Result};
use crate::model::{Benchmark, StepRecord};
use crate::scalar::Scalar;

/// Two-sided 99% normal critical value.
pub const Z_99: f64 = 2.576;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const DEFAULT_CV_WINDOW_STEP: usize = 50;
pub const DEFAULT_CV_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Premium,
    Effort,
    UtilityPrincipal,
    UtilityAgent,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Premium,
        Metric::Effort,
        Metric::UtilityPrincipal,
        Metric::UtilityAgent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Premium => "premium",
            Metric::Effort => "effort",
            Metric::UtilityPrincipal => "utility_principal",
            Metric::UtilityAgent => "utility_agent",
        }
    }

    pub fn value<S: Scalar>(self, step: &StepRecord<S>) -> S {
        match self {
            Metric::Premium => step.premium,
            Metric::Effort => step.effort,
            Metric::UtilityPrincipal => step.utility_principal,
            Metric::UtilityAgent => step.utility_agent,
        }
    }

    /// The benchmark value this metric is divided by.
    pub fn star<S: Scalar>(self, benchmark: &Benchmark<S>) -> S {
        match self {
            Metric::Premium => benchmark.premium_star,
            Metric::Effort => benchmark.effort_star,
            Metric::UtilityPrincipal => benchmark.utility_principal_star,
            Metric::UtilityAgent => benchmark.utility_agent_star,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Mean over rounds of a benchmark-normalized metric, per period, with 99% band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries<S> {
    pub metric: Metric,
    pub values: Vec<S>,
    pub ci_low: Vec<S>,
    pub ci_high: Vec<S>,
}

impl<S> NormalizedSeries<S> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-round traces of `metric / metric*`, one inner vector per round.
pub fn normalized_traces<S: Scalar>(
    rounds: &[RoundResult<S>],
    metric: Metric,
    benchmark: &Benchmark<S>,
) -> Result<Vec<Vec<S>>> {
    let star = metric.star(benchmark);
    if star == S::zero() || !star.is_finite() {
        return Err(HalError::Domain {
            name: "benchmark divisor",
            value: star.to_f64_lossy(),
            reason: "must be nonzero and finite",
        });
    }
    let Some(first) = rounds.first() else {
        return Err(HalError::Empty("rounds"));
    };
    let len = first.steps.len();
    rounds
        .iter()
        .map(|r| {
            if r.steps.len() != len {
                return Err(HalError::LengthMismatch {
                    left: len,
                    right: r.steps.len(),
                });
            }
            Ok(r.steps.iter().map(|s| metric.value(s) / star).collect())
        })
        .collect()
}

/// Pointwise mean and `mean ± z·sd/√n` band across traces of equal length.
///
/// Summation runs in trace order so the result does not depend on scheduling.
/// A single trace yields a zero-width band.
pub fn mean_band<S: Scalar>(traces: &[Vec<S>]) -> Result<(Vec<S>, Vec<S>, Vec<S>)> {
    let Some(first) = traces.first() else {
        return Err(HalError::Empty("traces"));
    };
    let len = first.len();
    if let Some(bad) = traces.iter().find(|t| t.len() != len) {
        return Err(HalError::LengthMismatch {
            left: len,
            right: bad.len(),
        });
    }
    let n = traces.len();
    let nf = S::lit(n as f64);
    let z = S::lit(Z_99);
    if n == 1 {
        log::warn!("confidence band from a single round has zero width");
    }
    let mut mean = vec![S::zero(); len];
    let mut low = vec![S::zero(); len];
    let mut high = vec![S::zero(); len];
    for t in 0..len {
        let m = traces.iter().fold(S::zero(), |acc, tr| acc + tr[t]) / nf;
        let half = if n > 1 {
            let ss = traces
                .iter()
                .fold(S::zero(), |acc, tr| acc + (tr[t] - m).powi(2));
            let sd = (ss / S::lit((n - 1) as f64)).sqrt();
            z * sd / nf.sqrt()
        } else {
            S::zero()
        };
        mean[t] = m;
        low[t] = m - half;
        high[t] = m + half;
    }
    Ok((mean, low, high))
}

/// Benchmark-normalized mean series of `metric` with its 99% band.
pub fn normalize_series<S: Scalar>(
    rounds: &[RoundResult<S>],
    metric: Metric,
    benchmark: &Benchmark<S>,
) -> Result<NormalizedSeries<S>> {
    let traces = normalized_traces(rounds, metric, benchmark)?;
    let (values, ci_low, ci_high) = mean_band(&traces)?;
    Ok(NormalizedSeries {
        metric,
        values,
        ci_low,
        ci_high,
    })
}

pub fn euclidean_distance<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    if a.len() != b.len() {
        return Err(HalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt())
}

fn column_sums(traces: &[&[f64]], len: usize) -> Vec<f64> {
    let mut sums = vec![0.0; len];
    for tr in traces {
        for (s, v) in sums.iter_mut().zip(tr.iter()) {
            *s += v;
        }
    }
    sums
}

/// Curve distance between group means for a given split of the pooled traces.
fn split_distance(first: &[&[f64]], total: &[f64], n_first: usize, n_second: usize) -> f64 {
    let sums = column_sums(first, total.len());
    sums.iter()
        .zip(total)
        .map(|(&s, &tot)| {
            let d = s / n_first as f64 - (tot - s) / n_second as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Permutation p-value for the distance between two groups' mean curves.
///
/// Group labels are reshuffled `permutations` times with a ChaCha8 stream
/// seeded by `seed`; `p = (1 + #{permuted ≥ observed}) / (1 + permutations)`.
pub fn significance_test<S: Scalar>(
    group_a: &[Vec<S>],
    group_b: &[Vec<S>],
    permutations: usize,
    seed: u64,
) -> Result<f64> {
    if group_a.is_empty() {
        return Err(HalError::Empty("group_a"));
    }
    if group_b.is_empty() {
        return Err(HalError::Empty("group_b"));
    }
    let len = group_a[0].len();
    let pooled: Vec<Vec<f64>> = group_a
        .iter()
        .chain(group_b)
        .map(|tr| {
            if tr.len() != len {
                return Err(HalError::LengthMismatch {
                    left: len,
                    right: tr.len(),
                });
            }
            Ok(tr.iter().map(|v| v.to_f64_lossy()).collect())
        })
        .collect::<Result<_>>()?;

    let n_a = group_a.len();
    let n_b = group_b.len();
    let refs: Vec<&[f64]> = pooled.iter().map(Vec::as_slice).collect();
    let total = column_sums(&refs, len);
    let observed = split_distance(&refs[..n_a], &total, n_a, n_b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = refs.clone();
    let mut extreme = 0usize;
    for _ in 0..permutations {
        let (first, _) = order.partial_shuffle(&mut rng, n_a);
        if split_distance(first, &total, n_a, n_b) + 1e-12 >= observed {
            extreme += 1;
        }
    }
    Ok((1 + extreme) as f64 / (1 + permutations) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub rounds: usize,
    /// `None` when the window mean is zero.
    pub cv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub window_step: usize,
    pub threshold: f64,
    pub points: Vec<CvPoint>,
    /// Smallest run count after which successive CVs stay within `threshold`.
    pub stabilizing_rounds: Option<usize>,
}

fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let scale = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    if mean.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) || mean == 0.0 {
        return None;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some(var.sqrt() / mean.abs())
}

/// Coefficient of variation over the first `k` rounds for
/// `k = step, 2·step, …`, and the run count from which it settles.
pub fn cv_stabilization<S: Scalar>(
    outcome_per_round: &[S],
    window_step: usize,
    threshold: f64,
) -> Result<CvReport> {
    if window_step == 0 {
        return Err(HalError::Domain {
            name: "window_step",
            value: 0.0,
            reason: "must be positive",
        });
    }
    if !(threshold > 0.0) {
        return Err(HalError::Domain {
            name: "threshold",
            value: threshold,
            reason: "must be positive",
        });
    }
    if outcome_per_round.len() < 2 * window_step {
        return Err(HalError::LengthMismatch {
            left: outcome_per_round.len(),
            right: 2 * window_step,
        });
    }
    let values: Vec<f64> = outcome_per_round.iter().map(|v| v.to_f64_lossy()).collect();
    let points: Vec<CvPoint> = (1..=values.len() / window_step)
        .map(|i| {
            let k = i * window_step;
            let cv = coefficient_of_variation(&values[..k]);
            if cv.is_none() {
                log::warn!(
                    "coefficient of variation undefined over the first {k} rounds (zero mean)"
                );
            }
            CvPoint { rounds: k, cv }
        })
        .collect();

    let defined: Vec<(usize, f64)> = points
        .iter()
        .filter_map(|p| p.cv.map(|cv| (p.rounds, cv)))
        .collect();
    let mut stabilizing_rounds = defined.last().map(|&(k, _)| k);
    for i in (1..defined.len()).rev() {
        if (defined[i].1 - defined[i - 1].1).abs() < threshold {
            stabilizing_rounds = Some(defined[i - 1].0);
        } else {
            break;
        }
    }
    if defined.len() >= 2 {
        let n = defined.len();
        if (defined[n - 1].1 - defined[n - 2].1).abs() >= threshold {
            stabilizing_rounds = None;
        }
    }
    Ok(CvReport {
        window_step,
        threshold,
        points,
        stabilizing_rounds,
    })
}
