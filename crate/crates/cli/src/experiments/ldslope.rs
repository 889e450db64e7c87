use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp, Weibull};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::compare::{levy_sup_samples, stable_walk_sup, sup_upper_process, UpperOptions, WalkOptions};
use hwq_core::dist::DistributionSpec;
use hwq_core::rng::{replicate, StreamFactory};
use hwq_core::special::{c_bs, hwr_rate};
use hwq_core::stats::{log_tail_points, ols, quantile};

use super::{queue_config, read_samples};
use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

/// Regression needs at least this many samples.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LdSource {
    /// Exact Levy-supremum draws; target `-hwr_rate`, `gamma = 1`.
    Levy,
    /// Integer-grid stable walk; same target.
    StableWalk,
    /// Exponential(rate); target `-rate`, `gamma = 1`.
    Exp,
    /// Weibull(shape, scale); target `-scale^{-shape}`, `gamma = shape`.
    Weibull,
    /// Upper-process supremum; target `c_bs`, `gamma = alpha_s - 1`.
    Upper,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LdSlopeParams {
    /// Sample file (one value per line); overrides `source`.
    pub input: Option<PathBuf>,
    pub source: LdSource,
    pub gamma: Option<f64>,
    pub samples: usize,
    pub boot: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    pub points: usize,
    pub rate: f64,
    pub shape: f64,
    pub scale: f64,
    pub alpha: Option<f64>,
    pub ca: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub n: usize,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub target: Option<f64>,
    /// Relative tolerance of the soft target check.
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for LdSlopeParams {
    fn default() -> Self {
        Self {
            input: None,
            source: LdSource::Levy,
            gamma: None,
            samples: MIN_SAMPLES,
            boot: 200,
            p_lo: 0.5,
            p_hi: 0.995,
            points: 40,
            rate: 1.0,
            shape: 0.5,
            scale: 1.0,
            alpha: None,
            ca: 1.0,
            b: 1.0,
            n: 100,
            arrival: DistributionSpec::exponential(),
            service: DistributionSpec::pareto(1.5),
            target: None,
            tolerance: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdFit {
    pub gamma: f64,
    pub slope: f64,
    /// 2.5% and 97.5% bootstrap quantiles of the slope.
    pub band: [f64; 2],
    pub samples: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Least-squares slope of the log empirical tail against `x^gamma`, with a
/// bootstrap band from resampling the draws.
pub fn fit_ld_slope(
    samples: &[f64],
    gamma: f64,
    p_lo: f64,
    p_hi: f64,
    points: usize,
    boot: usize,
    streams: &StreamFactory,
) -> Result<LdFit> {
    if samples.len() < MIN_SAMPLES {
        bail!("{} samples given; the slope fit needs at least {MIN_SAMPLES}", samples.len());
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (xs, ys) = log_tail_points(&sorted, gamma, p_lo, p_hi, points);
    let fit = ols(&xs, &ys).ok_or_else(|| anyhow!("insufficient tail mass: fewer than two distinct tail levels"))?;
    let slopes: Vec<f64> = replicate(boot, |i| {
        let mut rng = streams.stream("ld-bootstrap", i);
        let mut re: Vec<f64> = (0..sorted.len()).map(|_| sorted[rng.random_range(0..sorted.len())]).collect();
        re.sort_by(f64::total_cmp);
        let (bx, by) = log_tail_points(&re, gamma, p_lo, p_hi, points);
        ols(&bx, &by).map_or(f64::NAN, |f| f.slope)
    })
    .into_iter()
    .filter(|s| s.is_finite())
    .collect();
    let band = if slopes.is_empty() { [f64::NAN; 2] } else { [quantile(&slopes, 0.025), quantile(&slopes, 0.975)] };
    Ok(LdFit { gamma, slope: fit.slope, band, samples: samples.len(), xs, ys })
}

struct Draws {
    values: Vec<f64>,
    gamma: f64,
    target: Option<f64>,
    tolerance: f64,
}

fn draw(p: &LdSlopeParams, streams: &StreamFactory) -> Result<Draws> {
    let n = p.samples;
    Ok(match p.source {
        LdSource::Levy => {
            let alpha = p.alpha.unwrap_or(1.5);
            Draws {
                values: levy_sup_samples(alpha, p.ca, p.b, n, streams)?,
                gamma: 1.0,
                target: Some(-hwr_rate(p.b, p.ca, alpha)?),
                tolerance: 0.05,
            }
        }
        LdSource::StableWalk => {
            let alpha = p.alpha.unwrap_or(1.5);
            let opts = WalkOptions { reps: n, ..Default::default() };
            Draws {
                values: stable_walk_sup(alpha, p.ca, p.b, &opts, streams)?.values(),
                gamma: 1.0,
                target: Some(-hwr_rate(p.b, p.ca, alpha)?),
                tolerance: 0.1,
            }
        }
        LdSource::Exp => {
            let d = Exp::new(p.rate).map_err(|e| anyhow!("exponential rate: {e}"))?;
            let mut rng = streams.stream("ld-exp", 0);
            Draws {
                values: (0..n).map(|_| d.sample(&mut rng)).collect(),
                gamma: 1.0,
                target: Some(-p.rate),
                tolerance: 0.05,
            }
        }
        LdSource::Weibull => {
            let d = Weibull::new(p.scale, p.shape).map_err(|e| anyhow!("weibull parameters: {e}"))?;
            let mut rng = streams.stream("ld-weibull", 0);
            Draws {
                values: (0..n).map(|_| d.sample(&mut rng)).collect(),
                gamma: p.shape,
                target: Some(-p.scale.powf(-p.shape)),
                tolerance: 0.1,
            }
        }
        LdSource::Upper => {
            let cfg = queue_config(p.n, p.b, p.alpha.unwrap_or(2.0), &p.arrival, &p.service)?;
            let batch = sup_upper_process(&cfg, &UpperOptions { reps: n, ..Default::default() }, streams)?;
            let (gamma, target) = match p.service.tail_constant() {
                Some(tc) if tc.index < 2.0 => (tc.index - 1.0, Some(c_bs(p.b, tc.constant, tc.index)?)),
                _ => (1.0, None),
            };
            Draws { values: batch.values(), gamma, target, tolerance: 0.25 }
        }
    })
}

pub fn run_ld_slope(p: &LdSlopeParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let seed = require_seed(p.seed)?;
    let streams = StreamFactory::new(seed);
    let d = match &p.input {
        Some(path) => Draws { values: read_samples(path)?, gamma: 1.0, target: None, tolerance: 0.05 },
        None => draw(p, &streams.derive("ld-draws"))?,
    };
    let gamma = p.gamma.unwrap_or(d.gamma);
    let target = p.target.or(d.target);
    let tolerance = p.tolerance.unwrap_or(d.tolerance);
    let fit = fit_ld_slope(&d.values, gamma, p.p_lo, p.p_hi, p.points, p.boot, &streams.derive("ld-boot"))?;
    let mut t = Table::new(&[("x_gamma", "x^gamma at a tail level"), ("log_tail", "ln of the empirical P(X > x)")]);
    for (x, y) in fit.xs.iter().zip(&fit.ys) {
        t.push(vec![*x, *y]);
    }
    let mut checks = vec![Check::hard("tail slope is negative", fit.slope < 0.0, format!("slope {:.6}", fit.slope))];
    if let Some(target) = target {
        let rel = ((fit.slope - target) / target).abs();
        checks.push(Check::soft(
            format!("slope within {:.0}% of target", tolerance * 100.0),
            rel <= tolerance,
            format!(
                "slope {:.6} (band {:.6}..{:.6}) vs {target:.6}: {:.1}% off",
                fit.slope,
                fit.band[0],
                fit.band[1],
                rel * 100.0
            ),
        ));
    }
    let summary = json!({
        "gamma": gamma,
        "slope": fit.slope,
        "band": fit.band,
        "samples": fit.samples,
        "target": target,
    });
    Ok(ResultRecord::new("ld-slope", echo, t, summary, checks))
}
