use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::compare::{lower_bound_curve, sup_upper_process, LowerOptions, UpperOptions};
use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::{simulate_queue, InitialState, SimOptions, TailComparison, TailMode};
use hwq_core::rng::StreamFactory;
use hwq_core::stats::Estimate;

use super::{censoring_check, ordered, queue_config};
use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DominanceParams {
    pub n: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub x: Vec<f64>,
    pub queue_reps: usize,
    pub upper_reps: usize,
    pub lower_reps: usize,
    pub grid_points: usize,
    pub horizon: Option<f64>,
    pub initial: InitialState,
    pub seed: Option<u64>,
}

impl Default for DominanceParams {
    fn default() -> Self {
        Self {
            n: 100,
            b: 1.0,
            alpha: 2.0,
            arrival: DistributionSpec::exponential(),
            service: DistributionSpec::pareto(1.5),
            x: vec![0.5, 1.0, 2.0],
            queue_reps: SimOptions::default().reps,
            upper_reps: UpperOptions::default().reps,
            lower_reps: LowerOptions::default().reps,
            grid_points: LowerOptions::default().grid_points,
            horizon: None,
            initial: InitialState::Stationary,
            seed: None,
        }
    }
}

/// Paired tails of the lower-bound curve, the queue and the upper supremum.
pub struct Sandwich {
    pub lower: Option<Vec<Estimate>>,
    pub poisson_factor: Option<f64>,
    pub queue: Vec<Estimate>,
    pub upper: Vec<Estimate>,
    pub upper_censored: usize,
    pub upper_certificate: f64,
    pub halves_disagree: bool,
}

pub fn sandwich(p: &DominanceParams, streams: &StreamFactory) -> Result<Sandwich> {
    let cfg = queue_config(p.n, p.b, p.alpha, &p.arrival, &p.service)?;
    let cmp = TailComparison::GreaterEq;
    let opts = SimOptions { reps: p.queue_reps, horizon: p.horizon, initial: p.initial, ..Default::default() };
    let run = simulate_queue(&cfg, &opts, &streams.derive("queue"))?;
    let qt = run.tail(&p.x, cfg.scale(), TailMode::TimeAverage, cmp)?;
    let queue = (0..p.x.len()).map(|i| qt.estimate(i)).collect();
    let upper_batch =
        sup_upper_process(&cfg, &UpperOptions { reps: p.upper_reps, ..Default::default() }, &streams.derive("upper"))?;
    let upper = upper_batch.tail(&p.x, cmp);
    let (lower, poisson_factor) = if cfg.arrival.is_exponential() {
        let lo = LowerOptions { reps: p.lower_reps, t_grid: None, grid_points: p.grid_points };
        let mut vals = Vec::new();
        let mut factor = None;
        for (i, &x) in p.x.iter().enumerate() {
            let c = lower_bound_curve(&cfg, x, &lo, &streams.derive(&format!("lower-{i}")))?;
            factor = Some(c.poisson_factor);
            vals.push(c.value);
        }
        (Some(vals), factor)
    } else {
        (None, None)
    };
    Ok(Sandwich {
        lower,
        poisson_factor,
        queue,
        upper,
        upper_censored: upper_batch.censored,
        upper_certificate: upper_batch.max_certificate,
        halves_disagree: run.halves_disagree,
    })
}

pub fn run_dominance(p: &DominanceParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let seed = require_seed(p.seed)?;
    let s = sandwich(p, &StreamFactory::new(seed))?;
    let mut t = Table::new(&[
        ("x", "threshold for L/n^(1/alpha)"),
        ("lower", "lower-bound curve (exponential arrivals only)"),
        ("lower_se", "standard error of lower"),
        ("queue", "time-average P(L/n^(1/alpha) >= x)"),
        ("queue_se", "replication standard error of queue"),
        ("upper", "P(upper supremum >= x)"),
        ("upper_se", "binomial standard error of upper"),
    ]);
    let mut checks = Vec::new();
    for (i, &x) in p.x.iter().enumerate() {
        let q = &s.queue[i];
        let u = &s.upper[i];
        let l = s.lower.as_ref().map(|v| v[i]);
        t.push(vec![
            x,
            l.map_or(f64::NAN, |e| e.mean),
            l.map_or(f64::NAN, |e| e.std_error),
            q.mean,
            q.std_error,
            u.mean,
            u.std_error,
        ]);
        if let Some(l) = l {
            checks.push(Check::hard(
                format!("lower <= queue at x={x}"),
                ordered(&l, q, 3.0),
                format!("{:.5} ± {:.5} vs {:.5} ± {:.5}", l.mean, l.std_error, q.mean, q.std_error),
            ));
        }
        checks.push(Check::hard(
            format!("queue <= upper at x={x}"),
            ordered(q, u, 3.0),
            format!("{:.5} ± {:.5} vs {:.5} ± {:.5}", q.mean, q.std_error, u.mean, u.std_error),
        ));
    }
    checks.push(censoring_check("upper supremum", s.upper_censored, p.upper_reps));
    checks.push(Check::soft("queue window halves agree", !s.halves_disagree, ""));
    let notice = if s.lower.is_none() { Some("arrivals are not exponential; the lower leg is disabled") } else { None };
    if let Some(msg) = notice {
        eprintln!("notice: {msg}");
    }
    let summary = json!({
        "poisson_factor": s.poisson_factor,
        "upper_max_certificate": s.upper_certificate,
        "upper_censored": s.upper_censored,
        "notice": notice,
    });
    Ok(ResultRecord::new("dominance", echo, t, summary, checks))
}
