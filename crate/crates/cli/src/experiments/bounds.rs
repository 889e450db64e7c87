use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::bounds::{
    cbs_tail, hwr_tail, kingman, pooled_sup_bound, small_t_moment_bound, thm1_bound, BoundInputs, PooledSupParams,
};
use hwq_core::dist::DistributionSpec;
use hwq_core::special::LDConstants;

use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Thm1,
    Hwr,
    Cbs,
    Kingman,
    Pooled,
    Smallt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundEvalParams {
    pub which: BoundKind,
    /// Thresholds (`x`), or `λ` for `pooled`.
    pub x: Vec<f64>,
    pub eps: Option<f64>,
    pub frac_moment: Option<f64>,
    pub laplace_one: Option<f64>,
    pub sigma_sq_a: Option<f64>,
    /// Moments not given explicitly are taken from these laws.
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    #[serde(rename = "B")]
    pub b: f64,
    pub n: Option<f64>,
    /// Scaling index (`thm1`, default 2) or arrival tail index (`hwr`, default 1.5).
    pub alpha: Option<f64>,
    pub alpha_s: f64,
    pub ca: f64,
    pub cs: f64,
    pub y: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub r1: f64,
    pub s1: f64,
    pub r2: f64,
    pub nu: f64,
    pub p: f64,
    pub theta: f64,
    pub laplace_theta: Option<f64>,
    pub k: f64,
    pub t: Vec<f64>,
}

impl Default for BoundEvalParams {
    fn default() -> Self {
        Self {
            which: BoundKind::Thm1,
            x: vec![16.0, 32.0, 64.0],
            eps: None,
            frac_moment: None,
            laplace_one: None,
            sigma_sq_a: None,
            arrival: DistributionSpec::exponential(),
            service: DistributionSpec::exponential(),
            b: 1.0,
            n: None,
            alpha: None,
            alpha_s: 1.5,
            ca: 1.0,
            cs: 1.0,
            y: vec![1.1, 1.5, 2.0],
            c1: 1.0,
            c2: 1.0,
            r1: 2.0,
            s1: 1.5,
            r2: 3.0,
            nu: 5.0,
            p: 3.0,
            theta: 1.0,
            laplace_theta: None,
            k: 100.0,
            t: vec![0.0, 0.01, 0.5, 1.0],
        }
    }
}

/// `ε = min(1, (α_S - 1)/2)` for Pareto service, 1 otherwise.
fn default_eps(service: &DistributionSpec) -> f64 {
    match service.tail_constant() {
        Some(tc) => ((tc.index - 1.0) / 2.0).min(1.0),
        None => 1.0,
    }
}

fn thm1_inputs(p: &BoundEvalParams) -> Result<BoundInputs> {
    let eps = p.eps.unwrap_or_else(|| default_eps(&p.service));
    let frac_moment = match p.frac_moment {
        Some(m) => m,
        None => p.service.frac_moment(eps)?,
    };
    let laplace_one = match p.laplace_one {
        Some(l) => l,
        None => p.service.laplace(1.0)?,
    };
    let sigma_sq_a = p.sigma_sq_a.unwrap_or_else(|| p.arrival.variance());
    if !sigma_sq_a.is_finite() {
        bail!("the headline bound needs a finite arrival variance; got {} for {}", sigma_sq_a, p.arrival);
    }
    let mut inputs = BoundInputs::new(eps, frac_moment, laplace_one, sigma_sq_a, p.b);
    inputs.n = p.n;
    inputs.alpha = p.alpha.unwrap_or(2.0);
    inputs.arrival_tail = p.arrival.tail_constant().filter(|t| t.index < 2.0);
    inputs.service_tail = p.service.tail_constant().filter(|t| t.index < 2.0);
    Ok(inputs)
}

pub fn run_bound_eval(p: &BoundEvalParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let mut checks = Vec::new();
    let mut summary = json!({});
    let table = match p.which {
        BoundKind::Thm1 => {
            let inputs = thm1_inputs(p)?;
            let report = thm1_bound(&inputs, &p.x)?;
            let mut t = Table::new(&[
                ("x", "threshold for L/sqrt(n)"),
                ("thm1_log10", "log10 of the headline bound"),
                ("thm1", "headline bound capped at 1"),
                ("boundapart_log10", "log10 of the arrival-side component"),
                ("spartbound_log10", "log10 of the service-side component"),
                ("kingman_mean", "Kingman mean-wait bound (needs n)"),
                ("hwr", "exponential supremum tail (Pareto arrivals only)"),
                ("cbs", "large-deviations approximation (Pareto service only); not a bound"),
            ]);
            for r in &report.rows {
                t.push(vec![
                    r.x,
                    r.thm1.log10_raw,
                    r.thm1.capped,
                    r.boundapart.log10_raw,
                    r.spartbound.log10_raw,
                    r.kingman_mean.unwrap_or(f64::NAN),
                    r.hwr.unwrap_or(f64::NAN),
                    r.cbs.unwrap_or(f64::NAN),
                ]);
            }
            checks.push(Check::hard(
                "headline bound dominates its components",
                report.pipeline_dominates(),
                "thm1 >= boundapart + spartbound at every x",
            ));
            summary = json!({ "inputs": inputs, "cbs_is_approximation": true });
            t
        }
        BoundKind::Hwr => {
            let alpha = p.alpha.unwrap_or(1.5);
            let mut t = Table::new(&[("x", "threshold"), ("hwr", "exp(-rate x)")]);
            for &x in &p.x {
                t.push(vec![x, hwr_tail(p.b, p.ca, alpha, x)?]);
            }
            summary = json!({ "rate": hwr_core_rate(p.b, p.ca, alpha)? });
            t
        }
        BoundKind::Cbs => {
            let mut t = Table::new(&[("x", "threshold"), ("cbs", "exp(c_bs x^(alpha_s - 1)); approximation")]);
            for &x in &p.x {
                t.push(vec![x, cbs_tail(p.b, p.cs, p.alpha_s, x)?]);
            }
            summary = json!({ "approximation": "large-deviations limit, not a finite-x bound" });
            t
        }
        BoundKind::Kingman => {
            let s2 = p.sigma_sq_a.unwrap_or_else(|| p.arrival.variance());
            let mut t = Table::new(&[("y", "interarrival stretch"), ("kingman", "mean-wait bound")]);
            for &y in &p.y {
                t.push(vec![y, kingman(y, s2)?]);
            }
            t
        }
        BoundKind::Pooled => {
            let n = p.n.unwrap_or(100.0);
            let params = PooledSupParams { c1: p.c1, c2: p.c2, r1: p.r1, s1: p.s1, r2: p.r2 };
            let mut t = Table::new(&[
                ("lambda", "level"),
                ("log10_constant", "log10 of the leading constant"),
                ("log10_first", "log10 of the t>=1 term"),
                ("log10_second", "log10 of the t<=1 term"),
                ("log10_bound", "log10 of the bound"),
                ("bound", "bound capped at 1"),
            ]);
            for &lam in &p.x {
                let b = pooled_sup_bound(params, n, p.nu, lam)?;
                t.push(vec![lam, b.log10_constant, b.log10_first, b.log10_second, b.bound.log10_raw, b.bound.capped]);
            }
            t
        }
        BoundKind::Smallt => {
            let lap = match p.laplace_theta {
                Some(l) => l,
                None => p.service.laplace(p.theta)?,
            };
            let mut t = Table::new(&[("t", "time in [0, 1]"), ("log10_bound", "log10 of the moment bound")]);
            for &tt in &p.t {
                t.push(vec![tt, small_t_moment_bound(p.p, p.theta, lap, p.k, tt)?.log10_raw]);
            }
            t
        }
    };
    Ok(ResultRecord::new("bound-eval", echo, table, summary, checks))
}

fn hwr_core_rate(b: f64, ca: f64, alpha: f64) -> Result<f64> {
    Ok(hwq_core::special::hwr_rate(b, ca, alpha)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundConstantsParams {
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub alpha_s: Option<f64>,
    pub ca: f64,
    pub cs: f64,
}

impl Default for BoundConstantsParams {
    fn default() -> Self {
        Self { b: 1.0, alpha: 1.5, alpha_s: None, ca: 1.0, cs: 1.0 }
    }
}

pub fn run_bound_constants(p: &BoundConstantsParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let c = LDConstants::new(p.b, p.ca, p.cs, p.alpha, p.alpha_s.unwrap_or(p.alpha))?;
    let mut t = Table::new(&[
        ("c_alpha", "stable tail constant"),
        ("c_bs", "sub-exponential LD constant"),
        ("hwr_rate", "exponential rate of the Levy supremum"),
        ("dieker", "Gaussian-supremum LD constant"),
        ("gk_const", "heavy-tailed renewal variance constant"),
    ]);
    t.push(vec![c.c_alpha, c.c_bs, c.hwr_rate, c.dieker, c.gk_const]);
    let identity = (c.c_bs - c.dieker / c.gk_const).abs() <= 1e-9 * c.c_bs.abs();
    let checks =
        vec![Check::hard("c_bs = dieker / gk_const", identity, format!("{:e} vs {:e}", c.c_bs, c.dieker / c.gk_const))];
    Ok(ResultRecord::new("bound-constants", echo, t, serde_json::to_value(c)?, checks))
}
