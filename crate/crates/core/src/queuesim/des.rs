//! Event-driven FCFS multi-server simulator.
//!
//! Jobs are processed in arrival order against a heap of server free times:
//! job `j` starts at `max(a_j, earliest free time)`. Under FCFS start times
//! are nondecreasing, so the number waiting `L(t)` is the number of arrivals
//! by `t` minus the number of starts by `t`, and the starts of waiting jobs
//! form a FIFO.

use std::collections::{BinaryHeap, VecDeque};

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{MinTime, QueueConfig, TailComparison, TailEstimate, TailMode};
use crate::error::{ensure, Error, Result};
use crate::rng::{replicate, Stream, StreamFactory};
use crate::stats::Estimate;

/// State of the servers at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// All servers idle, no jobs.
    Empty,
    /// `min(Poisson(lambda), n)` busy servers with residual service times,
    /// the infinite-server stationary law truncated at `n`.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub reps: usize,
    /// Defaults to `50 sqrt(n)` mean service times.
    pub horizon: Option<f64>,
    pub warmup_fraction: f64,
    pub initial: InitialState,
    /// Horizon doublings allowed when the two halves of the observation
    /// window disagree on `P(L > 0)` by more than two standard errors.
    pub max_doublings: u32,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { reps: 30, horizon: None, warmup_fraction: 0.2, initial: InitialState::Stationary, max_doublings: 3 }
    }
}

impl SimOptions {
    pub fn horizon_for(&self, n: usize) -> f64 {
        self.horizon.unwrap_or(50.0 * (n as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitSummary {
    pub mean: Estimate,
    pub prob_wait: Estimate,
    pub jobs: u64,
}

/// Result of [`simulate_queue`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueRun {
    pub config: QueueConfig,
    pub horizon: f64,
    pub warmup: f64,
    pub doublings: u32,
    /// `true` if the halves still disagreed after the last doubling.
    pub halves_disagree: bool,
    /// Per replication: fraction of window time with `L = k`.
    pub time_hist: Vec<Vec<f64>>,
    /// Per replication: fraction of window arrivals that found `L = k`.
    pub arrival_hist: Vec<Vec<f64>>,
    pub utilization: Estimate,
    pub waits: WaitSummary,
}

impl QueueRun {
    pub fn reps(&self) -> usize {
        self.time_hist.len()
    }

    pub fn warmup_fraction(&self) -> f64 {
        self.warmup / self.horizon
    }

    fn hists(&self, mode: TailMode) -> Result<&[Vec<f64>]> {
        match mode {
            TailMode::TimeAverage => Ok(&self.time_hist),
            TailMode::ArrivalSampled => Ok(&self.arrival_hist),
            TailMode::LittlesLaw => {
                Err(Error::Unsupported("the general simulator does not use the counting identity".into()))
            }
        }
    }

    /// `P(L / scale > x)` (or `>=`) per threshold, replication-level s.e.
    pub fn tail(&self, thresholds: &[f64], scale: f64, mode: TailMode, cmp: TailComparison) -> Result<TailEstimate> {
        let hists = self.hists(mode)?;
        let per_rep: Vec<Vec<f64>> = hists
            .iter()
            .map(|h| {
                thresholds
                    .iter()
                    .map(|&x| {
                        let k = cmp.first_counted(x * scale);
                        h.iter().skip(k).sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        Ok(TailEstimate::from_replications(thresholds, &per_rep, mode, cmp, scale, self.warmup_fraction()))
    }

    /// Replication-averaged law of `L`.
    pub fn pooled_pmf(&self, mode: TailMode) -> Result<Vec<f64>> {
        let hists = self.hists(mode)?;
        let len = hists.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![0.0; len];
        for h in hists {
            for (o, v) in out.iter_mut().zip(h) {
                *o += v / hists.len() as f64;
            }
        }
        Ok(out)
    }

    /// `inf{l : P(L <= l) >= p} / scale` under the pooled law.
    pub fn quantile(&self, p: f64, scale: f64, mode: TailMode) -> Result<f64> {
        let pmf = self.pooled_pmf(mode)?;
        let mut acc = 0.0;
        for (k, m) in pmf.iter().enumerate() {
            acc += m;
            if acc >= p - 1e-12 {
                return Ok(k as f64 / scale);
            }
        }
        Ok(pmf.len().saturating_sub(1) as f64 / scale)
    }

    /// Quantile of `L / scale` per replication, for spread diagnostics.
    pub fn quantile_per_rep(&self, p: f64, scale: f64) -> Vec<f64> {
        self.time_hist
            .iter()
            .map(|h| {
                let mut acc = 0.0;
                let k = h.iter().position(|m| {
                    acc += m;
                    acc >= p - 1e-12
                });
                k.unwrap_or(h.len().saturating_sub(1)) as f64 / scale
            })
            .collect()
    }
}

struct RepStats {
    time_hist: Vec<f64>,
    arrival_hist: Vec<f64>,
    utilization: f64,
    mean_wait: f64,
    prob_wait: f64,
    jobs: u64,
    positive_first_half: f64,
    positive_second_half: f64,
}

fn bump(hist: &mut Vec<f64>, k: usize, w: f64) {
    if hist.len() <= k {
        hist.resize(k + 1, 0.0);
    }
    hist[k] += w;
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

fn run_replication(cfg: &QueueConfig, horizon: f64, warmup: f64, initial: InitialState, rng: &mut Stream) -> RepStats {
    let n = cfg.n;
    let lam = cfg.lambda();
    let eq_a = cfg.arrival.equilibrium().expect("validated config");
    let window = horizon - warmup;
    let mid = warmup + 0.5 * window;

    let mut busy_time = 0.0;
    let mut free: BinaryHeap<MinTime> = BinaryHeap::with_capacity(n);
    let busy0 = match initial {
        InitialState::Empty => 0,
        InitialState::Stationary => {
            let draw: f64 = Poisson::new(lam).expect("positive rate").sample(rng);
            (draw as usize).min(n)
        }
    };
    let eq_s = cfg.service.equilibrium().expect("validated config");
    for i in 0..n {
        let until = if i < busy0 { eq_s.sample(rng) } else { 0.0 };
        busy_time += overlap(0.0, until, warmup, horizon);
        free.push(MinTime(until));
    }

    let mut time_hist = Vec::new();
    let mut arrival_hist = Vec::new();
    let mut waiting: VecDeque<f64> = VecDeque::new();
    let mut clock = 0.0;
    let (mut pos1, mut pos2) = (0.0, 0.0);
    let (mut wait_sum, mut waited, mut jobs) = (0.0, 0u64, 0u64);

    let mut advance = |to: f64, level: usize, hist: &mut Vec<f64>, clock: &mut f64| {
        let w = overlap(*clock, to, warmup, horizon);
        if w > 0.0 {
            bump(hist, level, w);
            if level > 0 {
                pos1 += overlap(*clock, to, warmup, mid);
                pos2 += overlap(*clock, to, mid, horizon);
            }
        }
        *clock = to;
    };

    let mut a = eq_a.sample(rng) / lam;
    while a <= horizon {
        while let Some(&s) = waiting.front() {
            if s > a {
                break;
            }
            advance(s, waiting.len(), &mut time_hist, &mut clock);
            waiting.pop_front();
        }
        advance(a, waiting.len(), &mut time_hist, &mut clock);
        let MinTime(f) = free.pop().expect("n >= 1 servers");
        let start = a.max(f);
        let done = start + cfg.service.sample(rng);
        free.push(MinTime(done));
        busy_time += overlap(start, done, warmup, horizon);
        if a >= warmup {
            bump(&mut arrival_hist, waiting.len(), 1.0);
            jobs += 1;
            let w = start - a;
            wait_sum += w;
            if w > 0.0 {
                waited += 1;
            }
        }
        if start > a {
            waiting.push_back(start);
        }
        a += cfg.arrival.sample(rng) / lam;
    }
    while let Some(&s) = waiting.front() {
        if s > horizon {
            break;
        }
        advance(s, waiting.len(), &mut time_hist, &mut clock);
        waiting.pop_front();
    }
    advance(horizon, waiting.len(), &mut time_hist, &mut clock);

    for v in &mut time_hist {
        *v /= window;
    }
    if time_hist.is_empty() {
        time_hist.push(1.0);
    }
    let arrivals: f64 = arrival_hist.iter().sum();
    if arrivals > 0.0 {
        for v in &mut arrival_hist {
            *v /= arrivals;
        }
    } else {
        arrival_hist.push(1.0);
    }
    RepStats {
        time_hist,
        arrival_hist,
        utilization: busy_time / (n as f64 * window),
        mean_wait: if jobs > 0 { wait_sum / jobs as f64 } else { 0.0 },
        prob_wait: if jobs > 0 { waited as f64 / jobs as f64 } else { 0.0 },
        jobs,
        positive_first_half: pos1 / (mid - warmup),
        positive_second_half: pos2 / (horizon - mid),
    }
}

const UNSTABLE_UTILIZATION: f64 = 0.9999;

/// Steady-state simulation of the FCFS queue, `opts.reps` independent
/// replications. Statistics cover `[warmup_fraction * horizon, horizon]`.
pub fn simulate_queue(cfg: &QueueConfig, opts: &SimOptions, streams: &StreamFactory) -> Result<QueueRun> {
    cfg.validate()?;
    cfg.arrival.equilibrium()?;
    cfg.service.equilibrium()?;
    ensure(opts.reps >= 2, "reps", opts.reps as f64, "need at least two replications")?;
    ensure((0.0..1.0).contains(&opts.warmup_fraction), "warmup_fraction", opts.warmup_fraction, "must lie in [0, 1)")?;
    let mut horizon = opts.horizon_for(cfg.n);
    ensure(horizon.is_finite() && horizon > 0.0, "horizon", horizon, "must be finite and positive")?;

    let mut doublings = 0;
    loop {
        let warmup = opts.warmup_fraction * horizon;
        let tagged = streams.derive(&format!("queue-doubling-{doublings}"));
        let stats: Vec<RepStats> = replicate(opts.reps, |i| {
            let mut rng = tagged.stream("queue", i);
            run_replication(cfg, horizon, warmup, opts.initial, &mut rng)
        });
        if stats.iter().all(|s| s.utilization >= UNSTABLE_UTILIZATION) {
            let u = stats.iter().map(|s| s.utilization).sum::<f64>() / stats.len() as f64;
            return Err(Error::Unstable { utilization: u });
        }
        let first = Estimate::from_samples(&stats.iter().map(|s| s.positive_first_half).collect::<Vec<_>>());
        let second = Estimate::from_samples(&stats.iter().map(|s| s.positive_second_half).collect::<Vec<_>>());
        let combined = first.std_error.hypot(second.std_error);
        let disagree = (first.mean - second.mean).abs() > 2.0 * combined;
        if disagree && doublings < opts.max_doublings {
            doublings += 1;
            horizon *= 2.0;
            continue;
        }
        let col = |f: fn(&RepStats) -> f64| Estimate::from_samples(&stats.iter().map(f).collect::<Vec<_>>());
        let utilization = col(|s| s.utilization);
        let waits = WaitSummary {
            mean: col(|s| s.mean_wait),
            prob_wait: col(|s| s.prob_wait),
            jobs: stats.iter().map(|s| s.jobs).sum(),
        };
        let (time_hist, arrival_hist) = stats.into_iter().map(|s| (s.time_hist, s.arrival_hist)).unzip();
        return Ok(QueueRun {
            config: cfg.clone(),
            horizon,
            warmup,
            doublings,
            halves_disagree: disagree,
            time_hist,
            arrival_hist,
            utilization,
            waits,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Departure,
    Start,
    Arrival,
}

/// One event of a small-system trace; counts are taken right after the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub job: u64,
    pub arrived: u64,
    pub departed: u64,
    pub in_system: u64,
    pub waiting: u64,
}

/// Event trace of one run from an empty system, for debugging small configs.
pub fn trace_queue(cfg: &QueueConfig, horizon: f64, rng: &mut Stream) -> Result<Vec<TraceEvent>> {
    cfg.validate()?;
    ensure(horizon.is_finite() && horizon > 0.0, "horizon", horizon, "must be finite and positive")?;
    let lam = cfg.lambda();
    let eq_a = cfg.arrival.equilibrium()?;
    let mut free: BinaryHeap<MinTime> = (0..cfg.n).map(|_| MinTime(0.0)).collect();
    let mut raw = Vec::new();
    let mut a = eq_a.sample(rng) / lam;
    let mut job = 0u64;
    while a <= horizon {
        let MinTime(f) = free.pop().expect("n >= 1 servers");
        let start = a.max(f);
        let done = start + cfg.service.sample(rng);
        free.push(MinTime(done));
        raw.push((a, TraceKind::Arrival, job));
        if start <= horizon {
            raw.push((start, TraceKind::Start, job));
        }
        if done <= horizon {
            raw.push((done, TraceKind::Departure, job));
        }
        job += 1;
        a += cfg.arrival.sample(rng) / lam;
    }
    // At equal times: a departure frees a server before a start, and a job
    // arrives before it starts.
    raw.sort_by(|x, y| {
        x.0.total_cmp(&y.0).then_with(|| {
            let rank = |k: TraceKind| match k {
                TraceKind::Departure => 0,
                TraceKind::Arrival => 1,
                TraceKind::Start => 2,
            };
            rank(x.1).cmp(&rank(y.1)).then(x.2.cmp(&y.2))
        })
    });
    let (mut arrived, mut started, mut departed) = (0u64, 0u64, 0u64);
    Ok(raw
        .into_iter()
        .map(|(time, kind, job)| {
            match kind {
                TraceKind::Arrival => arrived += 1,
                TraceKind::Start => started += 1,
                TraceKind::Departure => departed += 1,
            }
            TraceEvent { time, kind, job, arrived, departed, in_system: arrived - departed, waiting: arrived - started }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;

    fn mm(n: usize, b: f64) -> QueueConfig {
        QueueConfig::new(n, b, 2.0, DistributionSpec::exponential(), DistributionSpec::exponential()).unwrap()
    }

    #[test]
    fn histograms_are_distributions() {
        let opts = SimOptions { reps: 4, horizon: Some(200.0), ..Default::default() };
        let run = simulate_queue(&mm(5, 1.0), &opts, &StreamFactory::new(2)).unwrap();
        for h in run.time_hist.iter().chain(&run.arrival_hist) {
            assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let t = run.tail(&[0.0, 0.5, 1.0, 3.0], 1.0, TailMode::TimeAverage, TailComparison::GreaterEq).unwrap();
        assert_eq!(t.probabilities[0], 1.0);
        assert!(t.probabilities.windows(2).all(|w| w[1] <= w[0]));
        assert!(run.utilization.mean > 0.5 && run.utilization.mean < 1.0);
    }

    #[test]
    fn horizon_before_first_arrival_gives_empty_queue() {
        let cfg = QueueConfig::new(3, 1.0, 2.0, DistributionSpec::deterministic(), DistributionSpec::deterministic())
            .unwrap();
        // lambda = 3 - sqrt(3) ~ 1.27; the first arrival is U/lambda, almost surely > 1e-9.
        let opts = SimOptions {
            reps: 3,
            horizon: Some(1e-9),
            initial: InitialState::Empty,
            max_doublings: 0,
            ..Default::default()
        };
        let run = simulate_queue(&cfg, &opts, &StreamFactory::new(1)).unwrap();
        let t = run.tail(&[1.0], 1.0, TailMode::TimeAverage, TailComparison::GreaterEq).unwrap();
        assert_eq!(t.probabilities[0], 0.0);
        assert_eq!(run.waits.jobs, 0);
    }

    #[test]
    fn trace_conserves_jobs_and_order() {
        let cfg =
            QueueConfig::new(3, 0.5, 2.0, DistributionSpec::exponential(), DistributionSpec::pareto(1.5)).unwrap();
        let mut rng = StreamFactory::new(4).stream("trace", 0);
        let tr = trace_queue(&cfg, 200.0, &mut rng).unwrap();
        assert!(!tr.is_empty());
        let mut starts = Vec::new();
        for e in &tr {
            assert_eq!(e.arrived, e.departed + e.in_system);
            assert!(e.in_system.saturating_sub(e.waiting) <= cfg.n as u64);
            if e.kind == TraceKind::Start {
                starts.push(e.job);
            }
        }
        assert!(starts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reproducible_across_pools() {
        let cfg = mm(4, 1.0);
        let opts = SimOptions { reps: 6, horizon: Some(100.0), ..Default::default() };
        let f = StreamFactory::new(77);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| simulate_queue(&cfg, &opts, &f).unwrap());
        let b = three.install(|| simulate_queue(&cfg, &opts, &f).unwrap());
        assert_eq!(a, b);
    }
}
