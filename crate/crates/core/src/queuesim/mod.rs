//! FCFS GI/GI/n simulation under the scaling `lambda = n - B n^{1/alpha}`.

mod des;
mod gidn;
mod mmn;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{ensure, Error, Result};
use crate::stats::Estimate;

pub use des::{simulate_queue, trace_queue, InitialState, QueueRun, SimOptions, TraceEvent, TraceKind, WaitSummary};
pub use gidn::{gidn_tail, GidnOptions, GidnRun};
pub use mmn::{mmn_exact, MmnDistribution};

/// Arrival rate `n - B n^{1/alpha}`; requires `n > B^{alpha/(alpha-1)}`.
pub fn lambda_n(n: usize, b: f64, alpha: f64) -> Result<f64> {
    ensure(n >= 1, "n", n as f64, "need at least one server")?;
    ensure(b.is_finite() && b > 0.0, "B", b, "must be finite and positive")?;
    ensure(alpha > 1.0 && alpha <= 2.0, "alpha", alpha, "scaling index must lie in (1, 2]")?;
    let nf = n as f64;
    ensure(
        nf > b.powf(alpha / (alpha - 1.0)),
        "n",
        nf,
        "n must exceed B^{alpha/(alpha-1)} for a positive arrival rate",
    )?;
    Ok(nf - b * nf.powf(1.0 / alpha))
}

/// One GI/GI/n instance. Inter-arrival times are `A / lambda` with `A` drawn
/// from `arrival`; both laws must have mean one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueConfig {
    pub n: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
}

impl QueueConfig {
    pub fn new(n: usize, b: f64, alpha: f64, arrival: DistributionSpec, service: DistributionSpec) -> Result<Self> {
        let c = Self { n, b, alpha, arrival, service };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        lambda_n(self.n, self.b, self.alpha)?;
        for (name, spec) in [("arrival", &self.arrival), ("service", &self.service)] {
            spec.validate()?;
            let m = spec.mean();
            if (m - 1.0).abs() > 1e-12 {
                return Err(Error::Unsupported(format!("{name} law `{spec}` has mean {m}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        let nf = self.n as f64;
        nf - self.b * nf.powf(1.0 / self.alpha)
    }

    /// Queue-length normalisation `n^{1/alpha}`.
    pub fn scale(&self) -> f64 {
        (self.n as f64).powf(1.0 / self.alpha)
    }
}

/// How the time-stationary distribution was sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// Fraction of post-warmup time.
    TimeAverage,
    /// State found by post-warmup arrivals.
    ArrivalSampled,
    /// Counting identity `Q ~ A(lambda (1 + W))` with stationary waits.
    LittlesLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailComparison {
    /// `P(L > x)`.
    Greater,
    /// `P(L >= x)`.
    GreaterEq,
}

impl TailComparison {
    /// Smallest integer queue length counted at threshold `level`.
    pub(crate) fn first_counted(self, level: f64) -> usize {
        let eps = 1e-9 * level.abs().max(1.0);
        let k = match self {
            Self::Greater => (level + eps).floor() + 1.0,
            Self::GreaterEq => (level - eps).ceil(),
        };
        k.max(0.0) as usize
    }
}

/// Complementary-CDF estimates of the normalised queue length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub mode: TailMode,
    pub comparison: TailComparison,
    /// Queue lengths are divided by this before comparison with thresholds.
    pub scale: f64,
    pub warmup_fraction: f64,
    pub reps: usize,
}

impl TailEstimate {
    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate { mean: self.probabilities[i], std_error: self.std_errors[i], reps: self.reps }
    }

    /// Builds the estimate from per-replication tail fractions (`per_rep[r][i]`).
    pub(crate) fn from_replications(
        thresholds: &[f64],
        per_rep: &[Vec<f64>],
        mode: TailMode,
        comparison: TailComparison,
        scale: f64,
        warmup_fraction: f64,
    ) -> Self {
        let mut probabilities = Vec::with_capacity(thresholds.len());
        let mut std_errors = Vec::with_capacity(thresholds.len());
        for i in 0..thresholds.len() {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            let e = Estimate::from_samples(&xs);
            probabilities.push(e.mean);
            std_errors.push(e.std_error);
        }
        Self {
            thresholds: thresholds.to_vec(),
            probabilities,
            std_errors,
            mode,
            comparison,
            scale,
            warmup_fraction,
            reps: per_rep.len(),
        }
    }
}

/// Min-heap key for `f64` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MinTime(pub f64);

impl Eq for MinTime {}
impl PartialOrd for MinTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for MinTime {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}
