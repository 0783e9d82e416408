//! Performance and robustness measurements over simulation traces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub const LAMBDA1_BIN_WIDTH: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("reputation vector is empty")]
    EmptyReputations,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("empty ensemble: no realization passed the filter")]
    EmptyEnsemble,
    #[error("records are not in time order at t = {0}")]
    OutOfOrder(u64),
}

/// Observables at one network time step. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    /// Population-average reputation at this step.
    pub b_mean: f64,
    pub lambda1: f64,
    pub core_size: usize,
    pub core_alive: bool,
    /// Users that left (and were replaced) at this step.
    pub departed: usize,
    /// Fraction of users that stayed, `1 - departed / N`.
    pub y_remaining: f64,
    pub whole_network: bool,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str =
        "t,b_mean,lambda1,core_size,core_alive,departed,y_remaining,whole_network";

    pub fn rewired_fraction(&self) -> f64 {
        1.0 - self.y_remaining
    }
}

/// `(1/N) sum_i b_i`.
pub fn population_mean_benefit(b: &[f64]) -> Result<f64, MetricsError> {
    if b.is_empty() {
        return Err(MetricsError::EmptyReputations);
    }
    Ok(b.iter().sum::<f64>() / b.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub alive: bool,
    pub length: u64,
}

/// Core lifetimes and recovery times.
///
/// A segment counts once the core state flips after it; the segment still open
/// at the end of a trace is censored and kept out of the means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub lifetimes: Vec<u64>,
    pub recoveries: Vec<u64>,
    pub censored: Vec<Segment>,
    pub mean_lifetime: Option<f64>,
    pub mean_recovery: Option<f64>,
    pub mean_rewired_fraction: f64,
    pub steps: u64,
}

impl RobustnessSummary {
    /// Pools segments of independent runs.
    pub fn pooled<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = &'a RobustnessSummary>,
    {
        let mut lifetimes = Vec::new();
        let mut recoveries = Vec::new();
        let mut censored = Vec::new();
        let mut steps = 0;
        let mut rewired = 0.0;
        for part in parts {
            lifetimes.extend_from_slice(&part.lifetimes);
            recoveries.extend_from_slice(&part.recoveries);
            censored.extend_from_slice(&part.censored);
            steps += part.steps;
            rewired += part.mean_rewired_fraction * part.steps as f64;
        }
        Self {
            mean_lifetime: mean_u64(&lifetimes),
            mean_recovery: mean_u64(&recoveries),
            mean_rewired_fraction: if steps > 0 {
                rewired / steps as f64
            } else {
                0.0
            },
            lifetimes,
            recoveries,
            censored,
            steps,
        }
    }
}

fn mean_u64(v: &[u64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<u64>() as f64 / v.len() as f64)
}

/// Streaming segmentation of the core-alive sequence.
#[derive(Debug, Clone, Default)]
pub struct RobustnessTracker {
    lifetimes: Vec<u64>,
    recoveries: Vec<u64>,
    open: Option<Segment>,
    steps: u64,
    rewired: f64,
}

impl RobustnessTracker {
    pub fn push(&mut self, core_alive: bool, rewired_fraction: f64) {
        self.steps += 1;
        self.rewired += rewired_fraction;
        match &mut self.open {
            Some(seg) if seg.alive == core_alive => seg.length += 1,
            Some(seg) => {
                let done = *seg;
                if done.alive {
                    self.lifetimes.push(done.length);
                } else {
                    self.recoveries.push(done.length);
                }
                *seg = Segment {
                    alive: core_alive,
                    length: 1,
                };
            }
            None => {
                self.open = Some(Segment {
                    alive: core_alive,
                    length: 1,
                })
            }
        }
    }

    pub fn finish(self) -> RobustnessSummary {
        RobustnessSummary {
            mean_lifetime: mean_u64(&self.lifetimes),
            mean_recovery: mean_u64(&self.recoveries),
            mean_rewired_fraction: if self.steps > 0 {
                self.rewired / self.steps as f64
            } else {
                0.0
            },
            lifetimes: self.lifetimes,
            recoveries: self.recoveries,
            censored: self.open.into_iter().collect(),
            steps: self.steps,
        }
    }
}

pub fn robustness_from_trace(records: &[StepRecord]) -> Result<RobustnessSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let mut tracker = RobustnessTracker::default();
    for (k, r) in records.iter().enumerate() {
        if k > 0 && r.t <= records[k - 1].t {
            return Err(MetricsError::OutOfOrder(r.t));
        }
        tracker.push(r.core_alive, r.rewired_fraction());
    }
    Ok(tracker.finish())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWithError {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanWithError {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let count = samples.len();
        if count == 0 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let std_error = if count > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std_error,
            count,
        })
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.std_error
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.std_error
    }
}

/// Fixed-width histogram of `lambda1` starting at zero; `probabilities[k]`
/// covers `[k * bin_width, (k + 1) * bin_width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Histogram {
    pub bin_width: f64,
    pub probabilities: Vec<f64>,
}

impl Lambda1Histogram {
    pub fn from_values(values: &[f64], bin_width: f64) -> Self {
        let bin = |v: f64| (v.max(0.0) / bin_width).floor() as usize;
        let bins = values.iter().map(|&v| bin(v) + 1).max().unwrap_or(0);
        let mut probabilities = vec![0.0; bins];
        for &v in values {
            probabilities[bin(v)] += 1.0;
        }
        let total = values.len() as f64;
        probabilities.iter_mut().for_each(|p| *p /= total);
        Self {
            bin_width,
            probabilities,
        }
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| p * (k as f64 + 0.5) * self.bin_width)
            .sum()
    }
}

/// Ensemble averages over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    /// Mean over runs of each run's final population-average reputation.
    pub mean_b: f64,
    pub runs: usize,
    pub t_max: u64,
    /// Records that passed the whole-network filter.
    pub included: usize,
    pub histogram_core_size: BTreeMap<usize, f64>,
    pub histogram_lambda1: Lambda1Histogram,
    pub mean_core_size: f64,
    pub mean_lambda1: f64,
}

/// Aggregates `(run, record)` pairs. `mean_b` uses the last record of each run;
/// the histograms use every record, restricted to whole-network snapshots when
/// `filter_whole` is set.
pub fn ensemble_average(
    records: &[(usize, StepRecord)],
    filter_whole: bool,
) -> Result<EnsembleSummary, MetricsError> {
    let mut finals: BTreeMap<usize, &StepRecord> = BTreeMap::new();
    for (run, rec) in records {
        match finals.get(run) {
            Some(prev) if prev.t >= rec.t => {}
            _ => {
                finals.insert(*run, rec);
            }
        }
    }
    let included: Vec<&StepRecord> = records
        .iter()
        .map(|(_, r)| r)
        .filter(|r| !filter_whole || r.whole_network)
        .collect();
    if included.is_empty() {
        return Err(MetricsError::EmptyEnsemble);
    }
    let runs = finals.len();
    let mean_b = finals.values().map(|r| r.b_mean).sum::<f64>() / runs as f64;
    let t_max = finals.values().map(|r| r.t + 1).max().unwrap_or(0);

    let total = included.len() as f64;
    let mut histogram_core_size = BTreeMap::new();
    for r in &included {
        *histogram_core_size.entry(r.core_size).or_insert(0.0) += 1.0 / total;
    }
    let lambdas: Vec<f64> = included.iter().map(|r| r.lambda1).collect();
    Ok(EnsembleSummary {
        mean_b,
        runs,
        t_max,
        included: included.len(),
        histogram_core_size,
        histogram_lambda1: Lambda1Histogram::from_values(&lambdas, LAMBDA1_BIN_WIDTH),
        mean_core_size: included.iter().map(|r| r.core_size as f64).sum::<f64>() / total,
        mean_lambda1: lambdas.iter().sum::<f64>() / total,
    })
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) test, normal approximation
/// with tie and continuity corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Option<RankSumTest> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return None;
    }
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = pooled.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let ties = (j - i + 1) as f64;
        tie_term += ties.powi(3) - ties;
        rank_sum_a += pooled[i..=j].iter().filter(|p| p.1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_a - n1f * (n1f + 1.0) / 2.0;
    let mean_u = n1f * n2f / 2.0;
    let var_u = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
    if var_u <= 0.0 {
        return Some(RankSumTest {
            u,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let diff = u - mean_u;
    let corrected = (diff.abs() - 0.5).max(0.0) * diff.signum();
    let z = corrected / var_u.sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0);
    Some(RankSumTest { u, z, p_value })
}
