use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::compare::{
    levy_sup_samples, lower_bound_curve, stable_walk_sup, sup_upper_process, LowerOptions, SupKind, SupremumBatch,
    Truncation, UpperOptions, WalkOptions,
};
use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::TailComparison;
use hwq_core::rng::StreamFactory;
use hwq_core::stats::Estimate;

use super::{censoring_check, queue_config, write_samples};
use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    Upper,
    Lower,
    StableWalk,
    Levy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundProcessParams {
    pub kind: ProcessKind,
    /// Which supremum for `upper`.
    pub part: SupKind,
    pub n: usize,
    #[serde(rename = "B")]
    pub b: f64,
    /// Scaling index for `upper`/`lower` (default 2); stable index for
    /// `stable-walk`/`levy` (default 1.5).
    pub alpha: Option<f64>,
    pub ca: f64,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub seed: Option<u64>,
    /// Defaults: 2000 upper, 4000 lower, 10000 walk and Levy.
    pub reps: Option<usize>,
    pub x: Vec<f64>,
    /// Fixed walk truncation; adaptive when absent.
    pub steps: Option<u64>,
    pub horizon_max: f64,
    pub grid_points: usize,
    /// One sample per line.
    pub out: Option<PathBuf>,
}

impl Default for BoundProcessParams {
    fn default() -> Self {
        Self {
            kind: ProcessKind::Upper,
            part: SupKind::Full,
            n: 100,
            b: 1.0,
            alpha: None,
            ca: 1.0,
            arrival: DistributionSpec::exponential(),
            service: DistributionSpec::exponential(),
            seed: None,
            reps: None,
            x: vec![0.5, 1.0, 2.0],
            steps: None,
            horizon_max: UpperOptions::default().horizon_max,
            grid_points: LowerOptions::default().grid_points,
            out: None,
        }
    }
}

fn tail_table(batch_tail: &[Estimate], xs: &[f64]) -> Table {
    let mut t = Table::new(&[("x", "threshold"), ("tail", "P(sup >= x)"), ("se", "binomial standard error")]);
    for (x, e) in xs.iter().zip(batch_tail) {
        t.push(vec![*x, e.mean, e.std_error]);
    }
    t
}

fn batch_summary(batch: &SupremumBatch, method: &str) -> serde_json::Value {
    let horizons: Vec<f64> = batch.samples.iter().map(|s| s.horizon_used).collect();
    json!({
        "certificate": {
            "method": method,
            "max_certificate": batch.max_certificate,
            "censored": batch.censored,
            "censoring_rate": batch.censoring_rate(),
            "max_horizon": horizons.iter().cloned().fold(0.0, f64::max),
            "mean_horizon": horizons.iter().sum::<f64>() / horizons.len().max(1) as f64,
        },
        "mean": batch.mean(),
    })
}

pub fn run_bound_process(p: &BoundProcessParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let seed = require_seed(p.seed)?;
    let streams = StreamFactory::new(seed);
    let cmp = TailComparison::GreaterEq;
    let mut checks: Vec<Check> = Vec::new();
    let (table, summary) = match p.kind {
        ProcessKind::Upper => {
            let cfg = queue_config(p.n, p.b, p.alpha.unwrap_or(2.0), &p.arrival, &p.service)?;
            let opts = UpperOptions {
                reps: p.reps.unwrap_or(UpperOptions::default().reps),
                kind: p.part,
                horizon_max: p.horizon_max,
                ..Default::default()
            };
            let batch = sup_upper_process(&cfg, &opts, &streams)?;
            if let Some(out) = &p.out {
                write_samples(out, &batch.values())?;
            }
            checks.push(censoring_check("upper supremum", batch.censored, batch.samples.len()));
            (tail_table(&batch.tail(&p.x, cmp), &p.x), batch_summary(&batch, "gaussian-approximate block bound"))
        }
        ProcessKind::StableWalk => {
            let opts = WalkOptions {
                reps: p.reps.unwrap_or(WalkOptions::default().reps),
                truncation: match p.steps {
                    Some(k) => Truncation::Fixed(k),
                    None => Truncation::Adaptive { cap: None },
                },
                ..Default::default()
            };
            let batch = stable_walk_sup(p.alpha.unwrap_or(1.5), p.ca, p.b, &opts, &streams)?;
            if let Some(out) = &p.out {
                write_samples(out, &batch.values())?;
            }
            checks.push(censoring_check("stable walk", batch.censored, batch.samples.len()));
            (tail_table(&batch.tail(&p.x, cmp), &p.x), batch_summary(&batch, "exponential drift bound"))
        }
        ProcessKind::Levy => {
            let alpha = p.alpha.unwrap_or(1.5);
            let xs = levy_sup_samples(alpha, p.ca, p.b, p.reps.unwrap_or(10_000), &streams)?;
            if let Some(out) = &p.out {
                write_samples(out, &xs)?;
            }
            let tails: Vec<Estimate> =
                p.x.iter().map(|&x| Estimate::proportion(xs.iter().filter(|&&v| v >= x).count(), xs.len())).collect();
            let rate = hwq_core::special::hwr_rate(p.b, p.ca, alpha)?;
            (
                tail_table(&tails, &p.x),
                json!({ "rate": rate, "mean": Estimate::from_samples(&xs), "certificate": { "exact": true } }),
            )
        }
        ProcessKind::Lower => {
            let cfg = queue_config(p.n, p.b, p.alpha.unwrap_or(2.0), &p.arrival, &p.service)?;
            let opts = LowerOptions {
                reps: p.reps.unwrap_or(LowerOptions::default().reps),
                t_grid: None,
                grid_points: p.grid_points,
            };
            let mut t = Table::new(&[
                ("x", "threshold"),
                ("value", "Poisson factor times the best pointwise probability"),
                ("se", "standard error of value"),
                ("best_t", "grid time attaining the maximum"),
            ]);
            let mut factor = f64::NAN;
            for (i, &x) in p.x.iter().enumerate() {
                let c = lower_bound_curve(&cfg, x, &opts, &streams.derive(&format!("lower-{i}")))?;
                factor = c.poisson_factor;
                t.push(vec![x, c.value.mean, c.value.std_error, c.t_grid[c.best_index]]);
            }
            (t, json!({ "poisson_factor": factor }))
        }
    };
    Ok(ResultRecord::new("bound-process", echo, table, summary, checks))
}
