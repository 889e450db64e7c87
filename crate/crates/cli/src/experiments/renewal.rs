use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hwq_core::dist::DistributionSpec;
use hwq_core::renewal::{estimate_renewal_fn, estimate_variance, farrell_bound, variance_bound, variance_by_integral};
use hwq_core::rng::StreamFactory;

use crate::config::require_seed;
use crate::record::{Check, ResultRecord, Table};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyRenewalParams {
    pub spec: DistributionSpec,
    pub t: Vec<f64>,
    /// Replications for the renewal function and the integral route.
    pub reps: usize,
    /// Replications for the direct variance; grows with `t` when absent.
    pub variance_reps: Option<usize>,
    /// Defaults to `min(1, (alpha - 1)/2)` for Pareto, 1 otherwise.
    pub eps: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for VerifyRenewalParams {
    fn default() -> Self {
        Self {
            spec: DistributionSpec::exponential(),
            t: vec![0.5, 1.0, 10.0, 100.0, 1000.0],
            reps: 10_000,
            variance_reps: None,
            eps: None,
            seed: None,
        }
    }
}

pub fn run_verify_renewal(p: &VerifyRenewalParams, echo: serde_json::Value) -> Result<ResultRecord> {
    let seed = require_seed(p.seed)?;
    let streams = StreamFactory::new(seed);
    let eps = p.eps.unwrap_or_else(|| match p.spec.tail_constant() {
        Some(tc) => ((tc.index - 1.0) / 2.0).min(1.0),
        None => 1.0,
    });
    let m = p.spec.frac_moment(eps)?;
    let renewal = estimate_renewal_fn(&p.spec, &p.t, p.reps, &streams.derive("renewal-function"))?;
    let variance = estimate_variance(&p.spec, &p.t, p.variance_reps, &streams.derive("variance"))?;
    let mut t = Table::new(&[
        ("t", "time"),
        ("renewal", "estimate of E[N_o(t)]"),
        ("renewal_se", "standard error of renewal"),
        ("farrell_bound", "bound on E[N_o(t)] + 1 - t"),
        ("variance", "estimate of Var N_1(t), equilibrium start"),
        ("variance_se", "standard error of variance"),
        ("variance_integral", "variance through the renewal-function integral"),
        ("variance_integral_se", "standard error of variance_integral"),
        ("variance_bound", "explicit variance bound"),
    ]);
    let mut checks = Vec::new();
    for (r, v) in renewal.iter().zip(&variance) {
        let tt = r.t;
        let fb = farrell_bound(eps, m, tt)?;
        let vb = variance_bound(eps, m, tt)?;
        let integral = variance_by_integral(&p.spec, tt, p.reps, &streams.derive(&format!("integral-{tt}")))?;
        let (re, ve) = (r.estimate, v.estimate);
        t.push(vec![tt, re.mean, re.std_error, fb, ve.mean, ve.std_error, integral.mean, integral.std_error, vb]);
        checks.push(Check::hard(
            format!("renewal function bound at t={tt}"),
            re.mean + 1.0 - tt - 3.0 * re.std_error <= fb && tt - 1.0 <= re.mean + 3.0 * re.std_error,
            format!("E[N_o] = {:.4} ± {:.4}, bound {fb:.4e}", re.mean, re.std_error),
        ));
        checks.push(Check::hard(
            format!("variance bound at t={tt}"),
            ve.mean - 3.0 * ve.std_error <= vb,
            format!("Var = {:.4} ± {:.4}, bound {vb:.4e}", ve.mean, ve.std_error),
        ));
        let se = (integral.std_error.powi(2) + ve.std_error.powi(2)).sqrt();
        checks.push(Check::soft(
            format!("integral route agrees at t={tt}"),
            (integral.mean - ve.mean).abs() <= 3.0 * se,
            format!("{:.4} vs {:.4} (combined s.e. {se:.4})", integral.mean, ve.mean),
        ));
    }
    let summary = json!({ "eps": eps, "frac_moment": m });
    Ok(ResultRecord::new("verify-renewal", echo, t, summary, checks))
}
