//! Samplers for the stochastic-comparison objects that bracket the queue:
//! the all-time supremum of the arrival-minus-service process (upper), the
//! pointwise Markovian lower-bound curve, the integer-grid stable-walk
//! supremum and the exponential law of the continuous Levy supremum.

mod lower;
mod stable;
mod upper;

use serde::{Deserialize, Serialize};

use crate::queuesim::TailComparison;
use crate::stats::Estimate;

pub use lower::{default_t_grid, lower_bound_curve, LowerBoundCurve, LowerOptions};
pub use stable::{
    grid_gap_check, levy_sup_sample, levy_sup_samples, stable_walk_sup, GridGapRecord, GridGapRow, Truncation,
    WalkOptions,
};
pub use upper::{count_variance_envelope, drift_certificate, sup_upper_process, SupKind, UpperOptions};

/// One draw of a truncated all-time supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupremumSample {
    /// Normalised supremum; at least 0 because the path starts at 0.
    pub value: f64,
    /// Time (or number of steps) simulated.
    pub horizon_used: f64,
    /// Bound on the probability that the path would exceed `value` after
    /// the truncation point: exact for the stable walk, Gaussian-approximate
    /// for renewal-driven processes.
    pub certificate: f64,
    pub censored: bool,
}

/// A batch of supremum draws with its aggregated certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupremumBatch {
    pub samples: Vec<SupremumSample>,
    /// Largest per-sample certificate.
    pub max_certificate: f64,
    pub censored: usize,
}

impl SupremumBatch {
    pub(crate) fn new(samples: Vec<SupremumSample>) -> Self {
        let max_certificate = samples.iter().map(|s| s.certificate).fold(0.0, f64::max);
        let censored = samples.iter().filter(|s| s.censored).count();
        Self { samples, max_certificate, censored }
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn censoring_rate(&self) -> f64 {
        self.censored as f64 / self.samples.len().max(1) as f64
    }

    pub fn mean(&self) -> Estimate {
        Estimate::from_samples(&self.values())
    }

    /// Empirical `P(sup > x)` (or `>=`) with binomial standard errors.
    pub fn tail(&self, thresholds: &[f64], cmp: TailComparison) -> Vec<Estimate> {
        thresholds
            .iter()
            .map(|&x| {
                let hits = self
                    .samples
                    .iter()
                    .filter(|s| match cmp {
                        TailComparison::Greater => s.value > x,
                        TailComparison::GreaterEq => s.value >= x - 1e-12 * x.abs().max(1.0),
                    })
                    .count();
                Estimate::proportion(hits, self.samples.len())
            })
            .collect()
    }
}
