//! One function per experiment: parameters in, [`ResultRecord`] out.

mod bounds;
mod dominance;
mod ldslope;
mod process;
mod queue;
mod reed;
mod renewal;
mod scaling;

pub use bounds::{run_bound_constants, run_bound_eval, BoundConstantsParams, BoundEvalParams, BoundKind};
pub use dominance::{run_dominance, DominanceParams};
pub use ldslope::{fit_ld_slope, run_ld_slope, LdFit, LdSlopeParams, LdSource};
pub use process::{run_bound_process, BoundProcessParams, ProcessKind};
pub use queue::{run_simulate_queue, SimulateQueueParams};
pub use reed::{run_reed_compare, ReedCompareParams};
pub use renewal::{run_verify_renewal, VerifyRenewalParams};
pub use scaling::{run_scaling_study, ScalingParams};

use anyhow::Result;
use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::QueueConfig;
use hwq_core::stats::Estimate;

use crate::record::Check;

pub(crate) fn queue_config(
    n: usize,
    b: f64,
    alpha: f64,
    arrival: &DistributionSpec,
    service: &DistributionSpec,
) -> Result<QueueConfig> {
    Ok(QueueConfig::new(n, b, alpha, arrival.clone(), service.clone())?)
}

/// `lo <= hi` up to `k` combined standard errors.
pub(crate) fn ordered(lo: &Estimate, hi: &Estimate, k: f64) -> bool {
    lo.mean <= hi.mean + k * (lo.std_error.powi(2) + hi.std_error.powi(2)).sqrt()
}

pub(crate) fn censoring_check(what: &str, censored: usize, reps: usize) -> Check {
    let rate = censored as f64 / reps.max(1) as f64;
    Check::hard(format!("{what} censoring below 1%"), rate < 0.01, format!("{censored} of {reps} samples censored"))
}

pub(crate) fn write_samples(path: &std::path::Path, values: &[f64]) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in values {
        writeln!(f, "{v}")?;
    }
    f.flush()?;
    Ok(())
}

pub(crate) fn read_samples(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?);
    }
    Ok(out)
}
