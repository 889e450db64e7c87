//! Integer-grid supremum of the drifted stable walk, the exponential law of
//! the continuous-time Levy supremum, and the grid-gap inequality linking
//! the two.
//!
//! The walk is `X(k) = -sigma Ŝ(k) - B k` with `sigma = (C_A / C_alpha)^{1/alpha}`
//! and `Ŝ` a sum of i.i.d. `S_alpha(1, 1, 0)` variables, i.e. the Levy process
//! `-sigma S_alpha(t) - B t` observed at integer times. That process has only
//! downward jumps, so its all-time supremum is exponential with rate
//! `hwr_rate(B, C_A, alpha)`; the walk supremum is dominated by it.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{SupremumBatch, SupremumSample};
use crate::dist::StableLaw;
use crate::error::{ensure, Result};
use crate::queuesim::TailComparison;
use crate::rng::{replicate, StreamFactory};
use crate::special::hwr_rate;
use crate::stats::Estimate;

/// How the infinite walk is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// Stop once `exp(-rate (M_k - X_k)) <= tol`, which bounds the chance that
    /// the rest of the walk climbs above the running maximum `M_k`. `cap`
    /// defaults to `max(10^4, 100 / B^2)` steps.
    Adaptive { cap: Option<u64> },
    /// Exactly `K` steps; the certificate is the union bound
    /// `Σ_{k > K} P(X(k) > 0)` with a Chernoff bound on the stable left tail.
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkOptions {
    pub reps: usize,
    pub truncation: Truncation,
    pub tol: f64,
}

impl Default for WalkOptions {
    fn default() -> Self {
        Self { reps: 10_000, truncation: Truncation::Adaptive { cap: None }, tol: 1e-4 }
    }
}

fn default_cap(b: f64) -> u64 {
    (100.0 / (b * b)).max(1e4).ceil() as u64
}

/// Chernoff bound `P(S < -y) <= exp(-(alpha-1)/alpha * y * (y |cos(pi alpha/2)| / alpha)^{1/(alpha-1)})`
/// for `S ~ S_alpha(1, 1, 0)`, from `E[exp(-g S)] = exp(g^alpha / |cos(pi alpha/2)|)`.
fn stable_left_tail_bound(alpha: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let c = (0.5 * PI * alpha).cos().abs();
    (-(alpha - 1.0) / alpha * y * (y * c / alpha).powf(1.0 / (alpha - 1.0))).exp()
}

fn fixed_certificate(alpha: f64, sigma: f64, b: f64, k_max: u64) -> f64 {
    let mut total = 0.0;
    let mut k = k_max + 1;
    loop {
        let y = b * (k as f64).powf(1.0 - 1.0 / alpha) / sigma;
        let term = stable_left_tail_bound(alpha, y);
        total += term;
        if term <= 1e-18 * total || term == 0.0 || k > k_max + 100_000_000 {
            break;
        }
        k += 1;
    }
    total.min(1.0)
}

/// Draws of `sup_{k >= 0} (-(C_A/C_alpha)^{1/alpha} Ŝ(k) - B k)`.
pub fn stable_walk_sup(
    alpha: f64,
    c_a: f64,
    b: f64,
    opts: &WalkOptions,
    streams: &StreamFactory,
) -> Result<SupremumBatch> {
    let rate = hwr_rate(b, c_a, alpha)?;
    let law = StableLaw::domain_limit(alpha, c_a)?;
    ensure(opts.reps >= 1, "reps", 0.0, "need at least one replication")?;
    ensure(opts.tol > 0.0 && opts.tol < 1.0, "tol", opts.tol, "must lie in (0, 1)")?;
    let (cap, fixed) = match opts.truncation {
        Truncation::Adaptive { cap } => (cap.unwrap_or_else(|| default_cap(b)), false),
        Truncation::Fixed(k) => (k, true),
    };
    ensure(cap >= 1, "K", cap as f64, "need at least one step")?;
    let fixed_cert = if fixed { fixed_certificate(alpha, law.sigma(), b, cap) } else { 0.0 };
    let stop_gap = (1.0 / opts.tol).ln() / rate;
    let samples = replicate(opts.reps, |i| {
        let mut rng = streams.stream("stable-walk", i);
        let (mut x, mut max) = (0.0f64, 0.0f64);
        let mut k = 0u64;
        while k < cap {
            x -= law.sample(&mut rng) + b;
            max = max.max(x);
            k += 1;
            if !fixed && max - x >= stop_gap {
                break;
            }
        }
        let certificate = if fixed { fixed_cert } else { (-rate * (max - x)).exp() };
        SupremumSample { value: max, horizon_used: k as f64, certificate, censored: !fixed && max - x < stop_gap }
    });
    Ok(SupremumBatch::new(samples))
}

/// One draw of the continuous-time supremum: exponential with rate
/// `hwr_rate(B, C_A, alpha)`.
pub fn levy_sup_sample<R: Rng + ?Sized>(alpha: f64, c_a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let rate = hwr_rate(b, c_a, alpha)?;
    Ok(Exp::new(rate).expect("positive rate").sample(rng))
}

pub fn levy_sup_samples(alpha: f64, c_a: f64, b: f64, reps: usize, streams: &StreamFactory) -> Result<Vec<f64>> {
    let rate = hwr_rate(b, c_a, alpha)?;
    let exp = Exp::new(rate).expect("positive rate");
    let mut rng = streams.stream("levy-sup", 0);
    Ok((0..reps).map(|_| exp.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGapRow {
    pub x: f64,
    /// `P(sup_t X(t) >= x)` from Levy-supremum draws.
    pub lhs: Estimate,
    pub lhs_exact: f64,
    /// `P(sup_k X(k) > x - c)` from walk draws.
    pub numerator: Estimate,
    pub rhs: f64,
    pub rhs_std_error: f64,
    pub holds: bool,
}

/// Check of `P(sup_t X >= x) <= P(sup_k X(k) > x - c) / P(inf_{[0,1]} X > -c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGapRecord {
    pub c: f64,
    pub grid_step: f64,
    /// `P(inf_{s in [0,1]} X(s) > -c)` on the fine grid.
    pub denominator: Estimate,
    pub rows: Vec<GridGapRow>,
    pub warning: Option<String>,
}

impl GridGapRecord {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Estimates both sides of the grid-gap inequality at each `x`. The
/// infimum over `[0, 1]` is taken over grid points `k * grid_step`, which can
/// only overstate the denominator.
#[allow(clippy::too_many_arguments)]
pub fn grid_gap_check(
    alpha: f64,
    c_a: f64,
    b: f64,
    c: f64,
    grid_step: f64,
    xs: &[f64],
    reps: usize,
    streams: &StreamFactory,
) -> Result<GridGapRecord> {
    ensure(c > 0.0, "c", c, "gap must be positive")?;
    ensure(grid_step > 0.0 && grid_step <= 0.01, "grid_step", grid_step, "must lie in (0, 0.01]")?;
    ensure(reps >= 2, "reps", reps as f64, "need at least two replications")?;
    let rate = hwr_rate(b, c_a, alpha)?;
    let law = StableLaw::domain_limit(alpha, c_a)?;
    let steps = (1.0 / grid_step).round() as usize;
    let h = 1.0 / steps as f64;
    let inc_scale = h.powf(1.0 / alpha);
    let gap = streams.derive("grid-gap");
    let survived: Vec<bool> = replicate(reps, |i| {
        let mut rng = gap.stream("fine-path", i);
        let mut x = 0.0f64;
        for _ in 0..steps {
            x -= inc_scale * law.sample(&mut rng) + b * h;
            if x <= -c {
                return false;
            }
        }
        true
    });
    let denominator = Estimate::proportion(survived.iter().filter(|&&s| s).count(), reps);
    let walk = stable_walk_sup(alpha, c_a, b, &WalkOptions { reps, ..Default::default() }, &gap)?;
    let levy = levy_sup_samples(alpha, c_a, b, reps, &gap)?;
    let shifted: Vec<f64> = xs.iter().map(|x| x - c).collect();
    let numerators = walk.tail(&shifted, TailComparison::Greater);
    let rows = xs
        .iter()
        .zip(numerators)
        .map(|(&x, num)| {
            let lhs = Estimate::proportion(levy.iter().filter(|&&v| v >= x).count(), reps);
            let d = denominator.mean;
            let rhs = if d > 0.0 { num.mean / d } else { f64::INFINITY };
            let rel_n = if num.mean > 0.0 { num.std_error / num.mean } else { 0.0 };
            let rel_d = if d > 0.0 { denominator.std_error / d } else { 0.0 };
            let rhs_std_error = rhs * rel_n.hypot(rel_d);
            let holds = lhs.mean <= rhs + 3.0 * lhs.std_error.hypot(rhs_std_error);
            GridGapRow { x, lhs, lhs_exact: (-rate * x).exp(), numerator: num, rhs, rhs_std_error, holds }
        })
        .collect();
    let warning = (denominator.mean < 0.2).then(|| {
        format!("denominator estimate {:.3} is below 0.2; the inequality is weak at c = {c}", denominator.mean)
    });
    Ok(GridGapRecord { c, grid_step: h, denominator, rows, warning })
}
