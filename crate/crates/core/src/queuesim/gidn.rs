//! GI/D/n fast path.
//!
//! With unit deterministic service and FCFS no job overtakes another, so job
//! `j` is served by the server that served job `j - n`:
//! `W_j = max(0, W_{j-n} + 1 - (a_j - a_{j-n}))`. The stationary queue
//! length is then read off the counting identity `Q ~ A(lambda (1 + W))`,
//! with `A` an independent unit-rate equilibrium renewal count of the
//! inter-arrival law, and `L = (Q - n)^+`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{InitialState, QueueConfig, TailComparison, TailEstimate, TailMode};
use crate::dist::DistributionSpec;
use crate::error::{ensure, Error, Result};
use crate::renewal::{RenewalMode, RenewalStream};
use crate::rng::{replicate, Stream, StreamFactory};
use crate::stats::Estimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GidnOptions {
    pub reps: usize,
    /// Discarded jobs, in units of `n` jobs.
    pub warmup_cycles: usize,
    pub samples_per_rep: usize,
    /// Jobs between recorded waits, in units of `n` jobs.
    pub spacing_cycles: usize,
    pub initial: InitialState,
}

impl Default for GidnOptions {
    fn default() -> Self {
        Self {
            reps: 30,
            warmup_cycles: 1000,
            samples_per_rep: 500,
            spacing_cycles: 5,
            initial: InitialState::Stationary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GidnRun {
    pub config: QueueConfig,
    pub options: GidnOptions,
    /// Per replication: samples of `L / n^{1/alpha}`.
    pub samples: Vec<Vec<f64>>,
    pub mean_wait: Estimate,
}

impl GidnRun {
    pub fn all_samples(&self) -> Vec<f64> {
        self.samples.concat()
    }

    /// Tail of `L / n^{1/alpha}` with replication-level standard errors.
    pub fn tail(&self, thresholds: &[f64], cmp: TailComparison) -> TailEstimate {
        let scale = self.config.scale();
        let per_rep: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|xs| {
                thresholds
                    .iter()
                    .map(|&x| {
                        let k = cmp.first_counted(x * scale);
                        xs.iter().filter(|&&v| (v * scale).round() as usize >= k).count() as f64 / xs.len() as f64
                    })
                    .collect()
            })
            .collect();
        let warm = self.options.warmup_cycles as f64
            / (self.options.warmup_cycles + self.options.samples_per_rep * self.options.spacing_cycles) as f64;
        TailEstimate::from_replications(thresholds, &per_rep, TailMode::LittlesLaw, cmp, scale, warm)
    }
}

fn run_replication(cfg: &QueueConfig, opts: &GidnOptions, rng: &mut Stream) -> (Vec<f64>, f64) {
    let n = cfg.n;
    let lam = cfg.lambda();
    let eq_a = cfg.arrival.equilibrium().expect("validated config");
    let mut free0: Vec<f64> = match opts.initial {
        InitialState::Empty => vec![0.0; n],
        InitialState::Stationary => {
            let draw: f64 = Poisson::new(lam).expect("positive rate").sample(rng);
            let busy = (draw as usize).min(n);
            (0..n).map(|i| if i < busy { rng.random::<f64>() } else { 0.0 }).collect()
        }
    };
    free0.sort_by(f64::total_cmp);

    let warm = opts.warmup_cycles * n;
    let spacing = (opts.spacing_cycles * n).max(1);
    let total = warm + opts.samples_per_rep * spacing;
    let mut arr = vec![0.0f64; n];
    let mut wait = vec![0.0f64; n];
    let mut out = Vec::with_capacity(opts.samples_per_rep);
    let mut wait_sum = 0.0;
    let scale = cfg.scale();
    let mut a = eq_a.sample(rng) / lam;
    for j in 0..total {
        let slot = j % n;
        let w = if j < n { (free0[j] - a).max(0.0) } else { (wait[slot] + 1.0 - (a - arr[slot])).max(0.0) };
        arr[slot] = a;
        wait[slot] = w;
        if j >= warm && (j - warm).is_multiple_of(spacing) {
            wait_sum += w;
            let mut counter =
                RenewalStream::new(&cfg.arrival, RenewalMode::Equilibrium, rng).expect("validated arrival law");
            let q = counter.count_until(lam * (1.0 + w), rng) as usize;
            out.push(q.saturating_sub(n) as f64 / scale);
        }
        a += cfg.arrival.sample(rng) / lam;
    }
    let mean_wait = wait_sum / out.len().max(1) as f64;
    (out, mean_wait)
}

/// Stationary tail of `L / n^{1/alpha}` for deterministic unit service.
pub fn gidn_tail(cfg: &QueueConfig, opts: &GidnOptions, streams: &StreamFactory) -> Result<GidnRun> {
    cfg.validate()?;
    if !matches!(cfg.service, DistributionSpec::Deterministic { .. }) {
        return Err(Error::Unsupported(format!("the GI/D/n path needs deterministic service, got `{}`", cfg.service)));
    }
    cfg.arrival.equilibrium()?;
    ensure(opts.reps >= 2, "reps", opts.reps as f64, "need at least two replications")?;
    ensure(opts.samples_per_rep >= 1, "samples_per_rep", 0.0, "need at least one sample")?;
    let results = replicate(opts.reps, |i| {
        let mut rng = streams.stream("gidn", i);
        run_replication(cfg, opts, &mut rng)
    });
    let waits: Vec<f64> = results.iter().map(|r| r.1).collect();
    Ok(GidnRun {
        config: cfg.clone(),
        options: opts.clone(),
        samples: results.into_iter().map(|r| r.0).collect(),
        mean_wait: Estimate::from_samples(&waits),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_random_service() {
        let cfg =
            QueueConfig::new(10, 1.0, 1.5, DistributionSpec::pareto(1.5), DistributionSpec::exponential()).unwrap();
        assert!(matches!(gidn_tail(&cfg, &GidnOptions::default(), &StreamFactory::new(1)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn huge_excess_capacity_means_no_queue() {
        let cfg =
            QueueConfig::new(400, 15.0, 2.0, DistributionSpec::pareto(1.5), DistributionSpec::deterministic()).unwrap();
        let opts = GidnOptions { reps: 3, warmup_cycles: 20, samples_per_rep: 50, ..Default::default() };
        let run = gidn_tail(&cfg, &opts, &StreamFactory::new(3)).unwrap();
        let t = run.tail(&[0.0], TailComparison::Greater);
        assert_eq!(t.probabilities[0], 0.0);
    }

    #[test]
    fn samples_are_lattice_points() {
        let cfg =
            QueueConfig::new(20, 1.0, 1.5, DistributionSpec::pareto(1.5), DistributionSpec::deterministic()).unwrap();
        let opts =
            GidnOptions { reps: 2, warmup_cycles: 10, samples_per_rep: 100, spacing_cycles: 1, ..Default::default() };
        let run = gidn_tail(&cfg, &opts, &StreamFactory::new(5)).unwrap();
        let s = cfg.scale();
        for v in run.all_samples() {
            assert!(v >= 0.0);
            assert!((v * s - (v * s).round()).abs() < 1e-9);
        }
    }
}
