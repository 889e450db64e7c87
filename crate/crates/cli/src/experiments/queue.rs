use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::{mmn_exact, simulate_queue, trace_queue, InitialState, SimOptions, TailComparison, TailMode};
use hwq_core::rng::StreamFactory;

use super::queue_config;
use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateQueueParams {
    pub n: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub seed: Option<u64>,
    pub reps: usize,
    pub horizon: Option<f64>,
    pub warmup: f64,
    pub initial: InitialState,
    pub max_doublings: u32,
    /// Thresholds for `L / scale >= x`.
    pub x: Vec<f64>,
    /// Defaults to `n^{1/alpha}`; use 1 for raw queue lengths.
    pub scale: Option<f64>,
    /// Writes a single-run event trace here (CSV).
    pub trace: Option<PathBuf>,
    pub trace_horizon: f64,
}

impl Default for SimulateQueueParams {
    fn default() -> Self {
        let o = SimOptions::default();
        Self {
            n: 100,
            b: 1.0,
            alpha: 2.0,
            arrival: DistributionSpec::exponential(),
            service: DistributionSpec::exponential(),
            seed: None,
            reps: o.reps,
            horizon: None,
            warmup: o.warmup_fraction,
            initial: o.initial,
            max_doublings: o.max_doublings,
            x: vec![0.0, 0.5, 1.0, 2.0],
            scale: None,
            trace: None,
            trace_horizon: 20.0,
        }
    }
}

pub fn run_simulate_queue(p: &SimulateQueueParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let seed = require_seed(p.seed)?;
    let cfg = queue_config(p.n, p.b, p.alpha, &p.arrival, &p.service)?;
    let streams = StreamFactory::new(seed);
    if let Some(path) = &p.trace {
        let mut rng = streams.stream("trace", 0);
        let events = trace_queue(&cfg, p.trace_horizon, &mut rng)?;
        let mut s = String::from("# hwq queue trace: counts taken right after each event\ntime,kind,job,arrived,departed,in_system,waiting\n");
        for e in &events {
            let kind = serde_json::to_value(e.kind)?;
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.time,
                kind.as_str().unwrap_or(""),
                e.job,
                e.arrived,
                e.departed,
                e.in_system,
                e.waiting
            ));
        }
        std::fs::write(path, s)?;
    }
    let opts = SimOptions {
        reps: p.reps,
        horizon: p.horizon,
        warmup_fraction: p.warmup,
        initial: p.initial,
        max_doublings: p.max_doublings,
    };
    let run = simulate_queue(&cfg, &opts, &streams)?;
    let scale = p.scale.unwrap_or_else(|| cfg.scale());
    let cmp = TailComparison::GreaterEq;
    let time = run.tail(&p.x, scale, TailMode::TimeAverage, cmp)?;
    let arr = run.tail(&p.x, scale, TailMode::ArrivalSampled, cmp)?;
    let exact = if cfg.arrival.is_exponential() && cfg.service.is_exponential() {
        Some(mmn_exact(cfg.n, cfg.lambda())?)
    } else {
        None
    };
    let mut t = Table::new(&[
        ("x", "threshold for L/scale"),
        ("p_time", "time-average P(L/scale >= x)"),
        ("se_time", "replication standard error of p_time"),
        ("p_arrival", "arrival-sampled P(L/scale >= x)"),
        ("se_arrival", "replication standard error of p_arrival"),
        ("p_exact", "exact M/M/n value (exponential inputs only)"),
    ]);
    let mut checks = Vec::new();
    for (i, &x) in p.x.iter().enumerate() {
        let k = (x * scale - 1e-9 * (x * scale).abs().max(1.0)).ceil().max(0.0) as usize;
        let ex = exact.as_ref().map(|d| d.tail_l(k));
        t.push(vec![
            x,
            time.probabilities[i],
            time.std_errors[i],
            arr.probabilities[i],
            arr.std_errors[i],
            ex.unwrap_or(f64::NAN),
        ]);
        if let Some(want) = ex {
            let e = time.estimate(i);
            checks.push(Check::hard(
                format!("M/M/n oracle at x={x}"),
                e.agrees_with(want, 3.0),
                format!("{:.5} ± {:.5} vs {want:.5}", e.mean, e.std_error),
            ));
        }
    }
    checks.push(Check::soft(
        "observation window halves agree",
        !run.halves_disagree,
        format!("{} horizon doublings, final horizon {}", run.doublings, run.horizon),
    ));
    let summary = json!({
        "lambda": cfg.lambda(),
        "scale": scale,
        "horizon": run.horizon,
        "warmup": run.warmup,
        "doublings": run.doublings,
        "halves_disagree": run.halves_disagree,
        "utilization": run.utilization,
        "waits": run.waits,
    });
    Ok(ResultRecord::new("simulate-queue", echo, t, summary, checks))
}
