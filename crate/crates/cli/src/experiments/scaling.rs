use anyhow::{ensure, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::{mmn_exact, simulate_queue, InitialState, SimOptions, TailComparison, TailMode};
use hwq_core::rng::StreamFactory;

use super::queue_config;
use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingParams {
    pub n_grid: Vec<usize>,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub quantile: f64,
    pub reps: usize,
    /// Multiplies the default `50 sqrt(n)` horizon.
    pub horizon_factor: f64,
    pub initial: InitialState,
    /// Largest acceptable max/min ratio of the quantiles across `n`.
    pub max_spread: f64,
    pub seed: Option<u64>,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self {
            n_grid: vec![25, 100, 400],
            b: 1.0,
            alpha: 2.0,
            arrival: DistributionSpec::exponential(),
            service: DistributionSpec::pareto(1.5),
            quantile: 0.9,
            reps: 30,
            horizon_factor: 10.0,
            initial: InitialState::Stationary,
            max_spread: 1.3,
            seed: None,
        }
    }
}

pub fn run_scaling_study(p: &ScalingParams, echo: serde_json::Value) -> Result<ResultRecord> {
    ensure!(p.n_grid.len() >= 3, "a scaling study needs at least three values of n");
    ensure!(p.quantile > 0.0 && p.quantile < 1.0, "quantile must lie in (0, 1)");
    let seed = require_seed(p.seed)?;
    let streams = StreamFactory::new(seed);
    let mut t = Table::new(&[
        ("n", "servers"),
        ("lambda", "arrival rate"),
        ("quantile", "pooled quantile of L/n^(1/alpha)"),
        ("rep_q_lo", "smallest per-replication quantile"),
        ("rep_q_hi", "largest per-replication quantile"),
        ("p_wait", "time-average P(L > 0)"),
        ("p_wait_se", "standard error of p_wait"),
        ("exact_quantile", "exact M/M/n quantile (exponential inputs only)"),
        ("utilization", "mean busy fraction"),
    ]);
    let mut checks = Vec::new();
    let mut quantiles = Vec::new();
    for &n in &p.n_grid {
        let cfg = queue_config(n, p.b, p.alpha, &p.arrival, &p.service)?;
        let base = SimOptions::default();
        let opts = SimOptions {
            reps: p.reps,
            horizon: Some(base.horizon_for(n) * p.horizon_factor),
            initial: p.initial,
            ..base
        };
        let run = simulate_queue(&cfg, &opts, &streams.derive(&format!("n={n}")))?;
        let scale = cfg.scale();
        let q = run.quantile(p.quantile, scale, TailMode::TimeAverage)?;
        let per_rep = run.quantile_per_rep(p.quantile, scale);
        let wait = run.tail(&[0.0], 1.0, TailMode::TimeAverage, TailComparison::Greater)?.estimate(0);
        let exact = if cfg.arrival.is_exponential() && cfg.service.is_exponential() {
            let d = mmn_exact(n, cfg.lambda())?;
            let k = (0..).find(|&k| 1.0 - d.tail_l(k + 1) >= p.quantile - 1e-12).unwrap_or(0);
            k as f64 / scale
        } else {
            f64::NAN
        };
        if run.halves_disagree {
            checks.push(Check::soft(
                format!("window halves agree at n={n}"),
                false,
                "estimate still drifting after doublings",
            ));
        }
        quantiles.push(q);
        t.push(vec![
            n as f64,
            cfg.lambda(),
            q,
            per_rep.iter().cloned().fold(f64::INFINITY, f64::min),
            per_rep.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            wait.mean,
            wait.std_error,
            exact,
            run.utilization.mean,
        ]);
    }
    let hi = quantiles.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = quantiles.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    checks.push(Check::hard(
        format!("quantile spread ratio <= {}", p.max_spread),
        spread <= p.max_spread,
        format!("max/min = {hi:.4}/{lo:.4} = {spread:.4}"),
    ));
    Ok(ResultRecord::new("scaling-study", echo, t, json!({ "spread_ratio": spread }), checks))
}
