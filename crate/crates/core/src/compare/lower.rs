//! Lower-bound curve for Markovian arrivals:
//! `P(Z >= n) * max_t P(n^{-1/alpha}(A(lambda t) - Σ N_i(t)) >= x)` with
//! `Z ~ Poisson(lambda)`, evaluated on a finite grid of `t`.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{ensure, Error, Result};
use crate::queuesim::QueueConfig;
use crate::renewal::Superposition;
use crate::rng::{replicate, StreamFactory};
use crate::special::poisson_tail;
use crate::stats::Estimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerOptions {
    pub reps: usize,
    /// Explicit grid; when absent [`default_t_grid`] is used.
    pub t_grid: Option<Vec<f64>>,
    pub grid_points: usize,
}

impl Default for LowerOptions {
    fn default() -> Self {
        Self { reps: 4000, t_grid: None, grid_points: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCurve {
    pub x: f64,
    pub poisson_factor: f64,
    pub t_grid: Vec<f64>,
    /// `P(n^{-1/alpha}(A(lambda t) - Σ N_i(t)) >= x)` per grid time.
    pub pointwise: Vec<Estimate>,
    pub best_index: usize,
    /// `poisson_factor * pointwise[best_index]`.
    pub value: Estimate,
}

/// Geometric grid over `[0.1, 10] T*`: `T* = (3 - a) x / (B (a - 1))` for
/// Pareto service with index `a < 2` (the time at which a Gaussian limit
/// with variance growing like `t^{3-a}` is most likely to exceed `x + B t`),
/// and `T* = x / B` otherwise. `x = 0` uses `T* = 1 / B`.
pub fn default_t_grid(service: &DistributionSpec, b: f64, x: f64, points: usize) -> Vec<f64> {
    let x_eff = if x > 0.0 { x } else { 1.0 };
    let peak = match *service {
        DistributionSpec::ParetoMeanOne { alpha } if alpha < 2.0 => (3.0 - alpha) * x_eff / (b * (alpha - 1.0)),
        _ => x_eff / b,
    };
    let points = points.max(2);
    (0..points).map(|i| peak * 0.1 * 100f64.powf(i as f64 / (points - 1) as f64)).collect()
}

/// Requires exponential arrivals. One path of the arrival and service
/// processes per replication is observed at every grid time.
pub fn lower_bound_curve(
    cfg: &QueueConfig,
    x: f64,
    opts: &LowerOptions,
    streams: &StreamFactory,
) -> Result<LowerBoundCurve> {
    cfg.validate()?;
    if !cfg.arrival.is_exponential() {
        return Err(Error::Unsupported(format!(
            "the lower-bound curve needs exponential arrivals, got `{}`",
            cfg.arrival
        )));
    }
    cfg.service.equilibrium()?;
    ensure(x >= 0.0 && x.is_finite(), "x", x, "must be finite and nonnegative")?;
    ensure(opts.reps >= 2, "reps", opts.reps as f64, "need at least two replications")?;
    let mut grid = opts.t_grid.clone().unwrap_or_else(|| default_t_grid(&cfg.service, cfg.b, x, opts.grid_points));
    ensure(!grid.is_empty(), "t_grid", 0.0, "must be nonempty")?;
    for &t in &grid {
        ensure(t > 0.0 && t.is_finite(), "t", t, "grid times must be finite and positive")?;
    }
    grid.sort_by(f64::total_cmp);

    let n = cfg.n;
    let lam = cfg.lambda();
    let level = x * cfg.scale();
    let hits: Vec<Vec<bool>> = replicate(opts.reps, |i| {
        let mut rng = streams.stream("lower-curve", i);
        let mut services = Superposition::new(n, &cfg.service, &mut rng).expect("validated config");
        let mut arrivals = 0.0f64;
        let mut prev = 0.0;
        grid.iter()
            .map(|&t| {
                // Poisson arrivals: independent increments over the grid.
                let mean = lam * (t - prev);
                if mean > 0.0 {
                    let k: f64 = Poisson::new(mean).expect("positive mean").sample(&mut rng);
                    arrivals += k;
                }
                prev = t;
                while services.next_time() <= t {
                    services.pop(&mut rng);
                }
                arrivals - services.total() as f64 >= level - 1e-9
            })
            .collect()
    });
    let pointwise: Vec<Estimate> =
        (0..grid.len()).map(|k| Estimate::proportion(hits.iter().filter(|h| h[k]).count(), opts.reps)).collect();
    let best_index =
        (0..grid.len()).max_by(|&a, &b| pointwise[a].mean.total_cmp(&pointwise[b].mean)).expect("nonempty grid");
    let poisson_factor = poisson_tail(lam, n as u64)?;
    let best = pointwise[best_index];
    Ok(LowerBoundCurve {
        x,
        poisson_factor,
        t_grid: grid,
        pointwise,
        best_index,
        value: Estimate {
            mean: poisson_factor * best.mean,
            std_error: poisson_factor * best.std_error,
            reps: best.reps,
        },
    })
}
