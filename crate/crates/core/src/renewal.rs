//! Ordinary and equilibrium renewal processes, their superposition, and
//! explicit bounds on the renewal function and on the equilibrium count
//! variance.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, EquilibriumLaw};
use crate::error::{ensure, Error, Result};
use crate::rng::{replicate, StreamFactory};
use crate::stats::{variance_estimate, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewalMode {
    /// First interval drawn from the base law.
    Ordinary,
    /// First interval drawn from the residual law; increments are stationary.
    Equilibrium,
}

/// One renewal counting process, advanced event by event.
#[derive(Debug, Clone)]
pub struct RenewalStream {
    spec: DistributionSpec,
    mode: RenewalMode,
    next_event: f64,
    count: u64,
}

impl RenewalStream {
    pub fn new<R: Rng + ?Sized>(spec: &DistributionSpec, mode: RenewalMode, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let first = match mode {
            RenewalMode::Ordinary => spec.sample(rng),
            RenewalMode::Equilibrium => spec.equilibrium()?.sample(rng),
        };
        Ok(Self { spec: spec.clone(), mode, next_event: first, count: 0 })
    }

    pub fn mode(&self) -> RenewalMode {
        self.mode
    }

    /// Time of the next (not yet counted) event.
    pub fn next_event(&self) -> f64 {
        self.next_event
    }

    /// Events counted so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Counts the pending event and schedules the following one; returns the
    /// time of the counted event.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let t = self.next_event;
        self.count += 1;
        self.next_event = t + self.spec.sample(rng);
        t
    }

    /// Advances through every event in `(.., t]` and returns the running count.
    pub fn count_until<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> u64 {
        while self.next_event <= t {
            self.advance(rng);
        }
        self.count
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    index: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.index.cmp(&other.index))
    }
}

/// Superposition of `n` independent equilibrium renewal processes sharing
/// one interval law. Events are served from a min-heap keyed by
/// `(time, stream index)`, so simultaneous events (deterministic intervals)
/// come out in stream order.
#[derive(Debug, Clone)]
pub struct Superposition {
    spec: DistributionSpec,
    heap: BinaryHeap<Reverse<Pending>>,
    counts: Vec<u64>,
    total: u64,
}

impl Superposition {
    pub fn new<R: Rng + ?Sized>(n: usize, spec: &DistributionSpec, rng: &mut R) -> Result<Self> {
        ensure(n >= 1, "n", n as f64, "need at least one stream")?;
        spec.validate()?;
        let eq: EquilibriumLaw = spec.equilibrium()?;
        let heap = (0..n).map(|index| Reverse(Pending { time: eq.sample(rng), index })).collect();
        Ok(Self { spec: spec.clone(), heap, counts: vec![0; n], total: 0 })
    }

    pub fn streams(&self) -> usize {
        self.counts.len()
    }

    pub fn next_time(&self) -> f64 {
        self.heap.peek().map_or(f64::INFINITY, |p| p.0.time)
    }

    /// Counts the earliest pending event; returns its time and stream index.
    pub fn pop<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (f64, usize) {
        let mut top = self.heap.peek_mut().expect("superposition has at least one stream");
        let Pending { time, index } = top.0;
        top.0.time = time + self.spec.sample(rng);
        drop(top);
        self.counts[index] += 1;
        self.total += 1;
        (time, index)
    }

    /// Total events counted.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// `Σ_i N_i(t) - n t` observed on a grid, with extremes over the whole path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledPath {
    pub n: usize,
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub centered: Vec<f64>,
    /// Supremum over `[0, horizon]` (attained at 0 or right after an event).
    pub running_max: f64,
    /// Infimum over `[0, horizon]` (attained at a left limit or at the horizon).
    pub running_min: f64,
    pub total_count: u64,
    pub stream_counts: Vec<u64>,
}

/// Guard against runs whose expected event count would not fit in memory/time.
const MAX_EXPECTED_EVENTS: f64 = 1e10;

/// Simulates the centered superposition of `n` equilibrium renewal processes
/// up to `horizon`, recording it at the (sorted) `grid` times.
pub fn pooled_centered_path<R: Rng + ?Sized>(
    n: usize,
    spec: &DistributionSpec,
    horizon: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<PooledPath> {
    ensure(horizon.is_finite() && horizon > 0.0, "horizon", horizon, "must be finite and positive")?;
    ensure(
        n as f64 * horizon / spec.mean() <= MAX_EXPECTED_EVENTS,
        "horizon",
        horizon,
        "expected event count exceeds the simulation guard",
    )?;
    ensure(grid.windows(2).all(|w| w[0] <= w[1]), "grid", f64::NAN, "grid times must be sorted")?;
    if let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) {
        ensure(lo >= 0.0 && hi <= horizon, "grid", hi, "grid must lie within [0, horizon]")?;
    }
    let mut sup = Superposition::new(n, spec, rng)?;
    let nf = n as f64;
    let mut centered = Vec::with_capacity(grid.len());
    let mut gi = 0;
    let (mut max, mut min) = (0.0f64, 0.0f64);
    loop {
        let t = sup.next_time();
        while gi < grid.len() && grid[gi] < t {
            centered.push(sup.total() as f64 - nf * grid[gi]);
            gi += 1;
        }
        if t > horizon {
            break;
        }
        min = min.min(sup.total() as f64 - nf * t);
        sup.pop(rng);
        max = max.max(sup.total() as f64 - nf * t);
    }
    min = min.min(sup.total() as f64 - nf * horizon);
    Ok(PooledPath {
        n,
        horizon,
        grid: grid.to_vec(),
        centered,
        running_max: max,
        running_min: min,
        total_count: sup.total(),
        stream_counts: sup.counts().to_vec(),
    })
}

/// An estimate attached to a time point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEstimate {
    pub t: f64,
    pub estimate: Estimate,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    ensure(!t_grid.is_empty(), "t_grid", 0.0, "must be nonempty")?;
    for &t in t_grid {
        ensure(t.is_finite() && t >= 0.0, "t", t, "times must be finite and nonnegative")?;
    }
    Ok(())
}

fn sorted_with_order(t_grid: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    order
}

/// Renewal function `E[N_o(t)]` of the ordinary process, one path per
/// replication observed at every grid time.
pub fn estimate_renewal_fn(
    spec: &DistributionSpec,
    t_grid: &[f64],
    reps: usize,
    streams: &StreamFactory,
) -> Result<Vec<GridEstimate>> {
    check_grid(t_grid)?;
    ensure(reps >= 2, "reps", reps as f64, "need at least two replications")?;
    spec.validate()?;
    let order = sorted_with_order(t_grid);
    let paths: Vec<Vec<f64>> = replicate(reps, |i| {
        let mut rng = streams.stream("renewal-function", i);
        let mut s = RenewalStream::new(spec, RenewalMode::Ordinary, &mut rng).expect("validated spec");
        let mut out = vec![0.0; t_grid.len()];
        for &k in &order {
            out[k] = s.count_until(t_grid[k], &mut rng) as f64;
        }
        out
    });
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let xs: Vec<f64> = paths.iter().map(|p| p[k]).collect();
            GridEstimate { t, estimate: Estimate::from_samples(&xs) }
        })
        .collect())
}

/// Default replication count for the variance estimator at time `t`:
/// `min(10^5, ceil(200 t^{1/4}))`, growing with `t` because the estimator's
/// own spread grows for heavy-tailed intervals.
pub fn default_variance_reps(t: f64) -> usize {
    (200.0 * t.max(1.0).powf(0.25)).ceil().min(1e5) as usize
}

/// `Var[N_1(t)]` for the equilibrium process, by the sample variance of
/// independent counts. `reps = None` uses [`default_variance_reps`] per time.
pub fn estimate_variance(
    spec: &DistributionSpec,
    t_grid: &[f64],
    reps: Option<usize>,
    streams: &StreamFactory,
) -> Result<Vec<GridEstimate>> {
    check_grid(t_grid)?;
    spec.equilibrium()?;
    t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let r = reps.unwrap_or_else(|| default_variance_reps(t));
            ensure(r >= 2, "reps", r as f64, "need at least two replications")?;
            let tagged = streams.derive(&format!("variance-{k}"));
            let counts: Vec<f64> = replicate(r, |i| {
                let mut rng = tagged.stream("equilibrium-count", i);
                let mut s = RenewalStream::new(spec, RenewalMode::Equilibrium, &mut rng).expect("validated spec");
                s.count_until(t, &mut rng) as f64
            });
            Ok(GridEstimate { t, estimate: variance_estimate(&counts) })
        })
        .collect()
}

/// `Var[N_1(t)]` through the integral representation
/// `2 ∫_0^t (E[N_o(s)] + 1/2 - s) ds`, integrating each simulated ordinary
/// path exactly: `∫_0^t N_o(s) ds = Σ_{T_k <= t} (t - T_k)`, so every path
/// contributes the unbiased term `2 Σ (t - T_k) + t - t²`.
pub fn variance_by_integral(spec: &DistributionSpec, t: f64, reps: usize, streams: &StreamFactory) -> Result<Estimate> {
    check_grid(&[t])?;
    ensure(reps >= 2, "reps", reps as f64, "need at least two replications")?;
    spec.validate()?;
    let terms: Vec<f64> = replicate(reps, |i| {
        let mut rng = streams.stream("variance-integral", i);
        let mut s = RenewalStream::new(spec, RenewalMode::Ordinary, &mut rng).expect("validated spec");
        let mut area = 0.0;
        while s.next_event() <= t {
            area += t - s.advance(&mut rng);
        }
        2.0 * area + t - t * t
    });
    Ok(Estimate::from_samples(&terms))
}

fn check_bound_inputs(eps: f64, frac_moment: f64, t: f64) -> Result<()> {
    ensure(eps > 0.0 && eps <= 1.0, "eps", eps, "must lie in (0, 1]")?;
    if !(frac_moment >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "frac_moment",
            value: frac_moment,
            reason: "E[S^{1+eps}] < 1 contradicts Jensen's inequality for a mean-one law",
        });
    }
    ensure(t >= 0.0, "t", t, "must be nonnegative")
}

/// Explicit bound `E[N_o(t)] + 1 - t <= (2 E[S^{1+eps}])^{1/eps} (1 + t^{1/(1+eps)})`.
pub fn farrell_bound(eps: f64, frac_moment: f64, t: f64) -> Result<f64> {
    check_bound_inputs(eps, frac_moment, t)?;
    Ok((2.0 * frac_moment).powf(1.0 / eps) * (1.0 + t.powf(1.0 / (1.0 + eps))))
}

/// Explicit bound `Var[N_1(t)] <= (4 E[S^{1+eps}])^{1/eps} (t + t^{1 + 1/(1+eps)})`.
pub fn variance_bound(eps: f64, frac_moment: f64, t: f64) -> Result<f64> {
    check_bound_inputs(eps, frac_moment, t)?;
    Ok((4.0 * frac_moment).powf(1.0 / eps) * (t + t.powf(1.0 + 1.0 / (1.0 + eps))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_equilibrium_is_shifted_lattice() {
        let mut rng = StreamFactory::new(3).stream("det", 0);
        let mut s = RenewalStream::new(&DistributionSpec::deterministic(), RenewalMode::Equilibrium, &mut rng).unwrap();
        let u = s.next_event();
        assert!((0.0..=1.0).contains(&u));
        for k in 0..5 {
            let t = s.advance(&mut rng);
            assert!((t - (u + k as f64)).abs() < 1e-12);
        }
        assert_eq!(s.count(), 5);
    }

    #[test]
    fn pooled_path_basic_invariants() {
        let mut rng = StreamFactory::new(9).stream("pool", 0);
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let p = pooled_centered_path(50, &DistributionSpec::pareto(1.5), 10.0, &grid, &mut rng).unwrap();
        assert_eq!(p.centered[0], 0.0);
        assert_eq!(p.centered.len(), grid.len());
        assert_eq!(p.total_count, p.stream_counts.iter().sum::<u64>());
        for w in p.centered.windows(2) {
            assert!(w[1] - w[0] >= -50.0 * 0.5 - 1e-9);
        }
        assert!(p.running_max >= p.centered.iter().cloned().fold(f64::MIN, f64::max));
        assert!(p.running_min <= p.centered.iter().cloned().fold(f64::MAX, f64::min));
    }

    #[test]
    fn pooled_path_rejects_bad_input() {
        let mut rng = StreamFactory::new(1).stream("pool", 0);
        let e = DistributionSpec::exponential();
        assert!(pooled_centered_path(0, &e, 1.0, &[], &mut rng).is_err());
        assert!(pooled_centered_path(1, &e, 0.0, &[], &mut rng).is_err());
        assert!(pooled_centered_path(1, &e, 1.0, &[2.0], &mut rng).is_err());
        assert!(pooled_centered_path(1, &e, 1.0, &[0.5, 0.2], &mut rng).is_err());
        assert!(pooled_centered_path(1_000_000, &e, 1e5, &[], &mut rng).is_err());
    }

    #[test]
    fn deterministic_renewal_function_is_floor() {
        let est =
            estimate_renewal_fn(&DistributionSpec::deterministic(), &[2.5, 0.5], 10, &StreamFactory::new(1)).unwrap();
        assert_eq!(est[0].estimate.mean, 2.0);
        assert_eq!(est[1].estimate.mean, 0.0);
    }

    #[test]
    fn bound_formulas() {
        assert!((farrell_bound(1.0, 2.0, 4.0).unwrap() - 12.0).abs() < 1e-12);
        assert!((variance_bound(1.0, 2.0, 1.0).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(variance_bound(0.5, 1.3, 0.0).unwrap(), 0.0);
        assert!(variance_bound(0.5, 0.9, 1.0).is_err());
        assert!(farrell_bound(0.0, 2.0, 1.0).is_err());
        assert!(farrell_bound(1.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn default_reps_schedule() {
        assert_eq!(default_variance_reps(1.0), 200);
        assert_eq!(default_variance_reps(1e4), 2000);
        assert_eq!(default_variance_reps(1e30), 100_000);
    }

    proptest! {
        #[test]
        fn bounds_monotone_in_t(eps in 0.05f64..1.0, m in 1.0f64..3.0, t in 0.0f64..1e3, dt in 0.0f64..10.0) {
            prop_assert!(farrell_bound(eps, m, t + dt).unwrap() >= farrell_bound(eps, m, t).unwrap());
            prop_assert!(variance_bound(eps, m, t + dt).unwrap() >= variance_bound(eps, m, t).unwrap());
        }

        #[test]
        fn superposition_counts_add_up(n in 1usize..40, horizon in 0.1f64..20.0, seed in 0u64..500) {
            let mut rng = StreamFactory::new(seed).stream("pool", 0);
            let p = pooled_centered_path(n, &DistributionSpec::pareto(1.5), horizon, &[0.0, horizon], &mut rng).unwrap();
            prop_assert_eq!(p.total_count, p.stream_counts.iter().sum::<u64>());
            let end = p.total_count as f64 - n as f64 * horizon;
            prop_assert!((p.centered[1] - end).abs() < 1e-9);
            prop_assert!(p.running_max >= 0.0 && p.running_min <= end + 1e-9);
        }
    }
}
