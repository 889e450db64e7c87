use anyhow::{anyhow, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::bounds::hwr_tail;
use hwq_core::compare::{stable_walk_sup, WalkOptions};
use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::{gidn_tail, GidnOptions, InitialState, TailComparison};
use hwq_core::rng::StreamFactory;
use hwq_core::special::hwr_rate;
use hwq_core::stats::ks_two_sample;

use super::{censoring_check, queue_config};
use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReedCompareParams {
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: f64,
    /// Heavy-tailed inter-arrival law; Pareto with index `alpha` when absent.
    pub arrival: Option<DistributionSpec>,
    pub reps: usize,
    pub samples_per_rep: usize,
    pub warmup_cycles: usize,
    pub spacing: usize,
    pub walk_reps: usize,
    pub x: Vec<f64>,
    pub max_ks: f64,
    pub seed: Option<u64>,
}

impl Default for ReedCompareParams {
    fn default() -> Self {
        let g = GidnOptions::default();
        Self {
            n: 200,
            alpha: 1.5,
            b: 1.0,
            arrival: None,
            reps: g.reps,
            samples_per_rep: g.samples_per_rep,
            warmup_cycles: g.warmup_cycles,
            spacing: g.spacing_cycles,
            walk_reps: WalkOptions::default().reps,
            x: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            max_ks: 0.1,
            seed: None,
        }
    }
}

/// Compares the scaled GI/D/n queue with the stable-walk supremum and the
/// exponential Levy tail.
pub fn run_reed_compare(p: &ReedCompareParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let seed = require_seed(p.seed)?;
    let streams = StreamFactory::new(seed);
    let arrival = p.arrival.clone().unwrap_or_else(|| DistributionSpec::pareto(p.alpha));
    let ca =
        arrival.tail_constant().ok_or_else(|| anyhow!("arrival law `{arrival}` has no power tail constant"))?.constant;
    let cfg = queue_config(p.n, p.b, p.alpha, &arrival, &DistributionSpec::deterministic())?;
    let opts = GidnOptions {
        reps: p.reps,
        warmup_cycles: p.warmup_cycles,
        samples_per_rep: p.samples_per_rep,
        spacing_cycles: p.spacing,
        initial: InitialState::Stationary,
    };
    let run = gidn_tail(&cfg, &opts, &streams.derive("gidn"))?;
    let walk = stable_walk_sup(
        p.alpha,
        ca,
        p.b,
        &WalkOptions { reps: p.walk_reps, ..Default::default() },
        &streams.derive("walk"),
    )?;
    let cmp = TailComparison::GreaterEq;
    let q = run.tail(&p.x, cmp);
    let w = walk.tail(&p.x, cmp);
    let rate = hwr_rate(p.b, ca, p.alpha)?;
    let mut t = Table::new(&[
        ("x", "threshold for L/n^(1/alpha)"),
        ("gidn", "P(L/n^(1/alpha) >= x) in GI/D/n"),
        ("gidn_se", "replication standard error of gidn"),
        ("walk", "P(stable walk supremum >= x)"),
        ("walk_se", "binomial standard error of walk"),
        ("levy", "exponential Levy-supremum tail"),
    ]);
    for (i, &x) in p.x.iter().enumerate() {
        let e = q.estimate(i);
        t.push(vec![x, e.mean, e.std_error, w[i].mean, w[i].std_error, hwr_tail(p.b, ca, p.alpha, x)?]);
    }
    let ks = ks_two_sample(&run.all_samples(), &walk.values());
    let wm = walk.mean();
    let checks = vec![
        Check::hard(format!("KS distance <= {}", p.max_ks), ks <= p.max_ks, format!("KS = {ks:.4}")),
        Check::hard(
            "walk mean <= Levy mean",
            wm.mean <= 1.0 / rate + 3.0 * wm.std_error,
            format!("{:.4} ± {:.4} vs {:.4}", wm.mean, wm.std_error, 1.0 / rate),
        ),
        censoring_check("stable walk", walk.censored, p.walk_reps),
    ];
    let summary = json!({
        "ks": ks,
        "rate": rate,
        "walk_mean": wm,
        "gidn_mean_wait": run.mean_wait,
        "c_a": ca,
    });
    Ok(ResultRecord::new("reed-compare", echo, t, summary, checks))
}
