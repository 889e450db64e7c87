//! Explicit finite-n bounds and closed-form tail curves.
//!
//! The headline bound and its components carry constants as large as
//! `10^100`, so everything probability-like is assembled in `log10` space and
//! reported next to its capped value `min(raw, 1)`.

use serde::{Deserialize, Serialize};

use crate::dist::TailConstant;
use crate::error::{ensure, Result};
use crate::special::{c_bs, hwr_rate};

/// A possibly astronomical nonnegative quantity, stored as `log10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBound {
    pub log10_raw: f64,
    /// `min(raw, 1)`.
    pub capped: f64,
}

impl LogBound {
    pub fn from_log10(log10_raw: f64) -> Self {
        let capped = if log10_raw >= 0.0 { 1.0 } else { 10f64.powf(log10_raw) };
        Self { log10_raw, capped }
    }

    pub fn from_value(v: f64) -> Self {
        Self::from_log10(v.log10())
    }

    /// Raw value; overflows to `+inf` above `~1.8e308`.
    pub fn raw(&self) -> f64 {
        10f64.powf(self.log10_raw)
    }
}

fn log10_sum(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

/// Kingman's mean-wait bound for a single-server queue with interarrivals
/// `y·A` and unit service: `y² σ²_A / (2 (y - 1))`.
pub fn kingman(y: f64, sigma_sq_a: f64) -> Result<f64> {
    ensure(y > 1.0, "y", y, "must exceed 1")?;
    ensure(sigma_sq_a >= 0.0, "sigma_sq_A", sigma_sq_a, "must be non-negative")?;
    Ok(y * y * sigma_sq_a / (2.0 * (y - 1.0)))
}

/// Moment-condition parameters of the pooled-supremum bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledSupParams {
    pub c1: f64,
    pub c2: f64,
    pub r1: f64,
    pub s1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledSupBound {
    /// `log10` of the leading constant `(100 (r1+r2)³ / ((s1-1)(r1-s1)(r2-2)))^{r1+r2+2}`.
    pub log10_constant: f64,
    /// `log10` of `C1 n^{r1/2} ν^{-s1} λ^{-(r1-s1)}`.
    pub log10_first: f64,
    /// `log10` of `C2 n^{r2/2} (λν)^{-r2/2}`.
    pub log10_second: f64,
    pub bound: LogBound,
}

/// Bound on `P(sup_t (n t - Σ N_i(t) - ν t) ≥ λ)` given a moment bound
/// `C1 n^{r1/2} t^{s1}` for `t ≥ 1` and `C2 max(nt, (nt)^{r2/2})` on `[0, 1]`.
pub fn pooled_sup_bound(p: PooledSupParams, n: f64, nu: f64, lam: f64) -> Result<PooledSupBound> {
    ensure(p.c1 >= 0.0, "C1", p.c1, "must be non-negative")?;
    ensure(p.c2 >= 0.0, "C2", p.c2, "must be non-negative")?;
    ensure(p.s1 > 1.0, "s1", p.s1, "must exceed 1")?;
    ensure(p.r1 > p.s1, "r1", p.r1, "must exceed s1")?;
    ensure(p.r2 > 2.0, "r2", p.r2, "must exceed 2")?;
    ensure(n >= 1.0, "n", n, "must be at least 1")?;
    ensure(nu > 0.0, "nu", nu, "must be positive")?;
    ensure(lam >= 8.0, "lambda", lam, "must be at least 8")?;

    let base = 100.0 * (p.r1 + p.r2).powi(3) / ((p.s1 - 1.0) * (p.r1 - p.s1) * (p.r2 - 2.0));
    let log10_constant = (p.r1 + p.r2 + 2.0) * base.log10();
    let log10_first = p.c1.log10() + 0.5 * p.r1 * n.log10() - p.s1 * nu.log10() - (p.r1 - p.s1) * lam.log10();
    let log10_second = p.c2.log10() + 0.5 * p.r2 * n.log10() - 0.5 * p.r2 * (lam * nu).log10();
    Ok(PooledSupBound {
        log10_constant,
        log10_first,
        log10_second,
        bound: LogBound::from_log10(log10_constant + log10_sum(log10_first, log10_second)),
    })
}

fn check_laplace(laplace: f64, name: &'static str) -> Result<()> {
    ensure(laplace > 0.0 && laplace < 1.0, name, laplace, "must lie in (0, 1)")
}

fn check_eps(eps: f64) -> Result<()> {
    ensure(eps > 0.0 && eps <= 1.0, "eps", eps, "must lie in (0, 1]")
}

/// Small-time central moment bound for `k` pooled equilibrium renewals:
/// `e^θ (10^5 p^4 / (1 - E[e^{-θS}]))^{p+2} max(kt, (kt)^{p/2})`, in `log10`.
pub fn small_t_moment_bound(p: f64, theta: f64, laplace_theta: f64, k: f64, t: f64) -> Result<LogBound> {
    ensure(p >= 2.0, "p", p, "must be at least 2")?;
    ensure(theta > 0.0, "theta", theta, "must be positive")?;
    check_laplace(laplace_theta, "laplace_theta")?;
    ensure(k >= 1.0, "k", k, "must be at least 1")?;
    ensure((0.0..=1.0).contains(&t), "t", t, "must lie in [0, 1]")?;
    let kt = k * t;
    let log10_max = if kt == 0.0 { f64::NEG_INFINITY } else { kt.log10().max(0.5 * p * kt.log10()) };
    let log10_raw =
        theta * std::f64::consts::LOG10_E + (p + 2.0) * (1e5 * p.powi(4) / (1.0 - laplace_theta)).log10() + log10_max;
    // Not a probability; the cap is meaningless but harmless.
    Ok(LogBound::from_log10(log10_raw))
}

/// Inputs shared by the headline bound and its proof components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub eps: f64,
    /// `E[S^{1+ε}]`.
    pub frac_moment: f64,
    /// `E[e^{-S}]`.
    pub laplace_one: f64,
    pub sigma_sq_a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    /// Server count; enables the Kingman column.
    pub n: Option<f64>,
    /// Scaling index of the regime; the headline bound itself is for 2.
    pub alpha: f64,
    /// Arrival tail, for the exponential supremum curve.
    pub arrival_tail: Option<TailConstant>,
    /// Service tail, for the sub-exponential approximation.
    pub service_tail: Option<TailConstant>,
}

impl BoundInputs {
    pub fn new(eps: f64, frac_moment: f64, laplace_one: f64, sigma_sq_a: f64, b: f64) -> Self {
        Self {
            eps,
            frac_moment,
            laplace_one,
            sigma_sq_a,
            b,
            n: None,
            alpha: 2.0,
            arrival_tail: None,
            service_tail: None,
        }
    }

    fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        ensure(self.frac_moment >= 1.0, "frac_moment", self.frac_moment, "must be at least 1")?;
        check_laplace(self.laplace_one, "laplace_one")?;
        ensure(self.sigma_sq_a >= 0.0, "sigma_sq_A", self.sigma_sq_a, "must be non-negative")?;
        ensure(self.b > 0.0, "B", self.b, "must be positive")?;
        ensure(self.alpha > 1.0 && self.alpha <= 2.0, "alpha", self.alpha, "must lie in (1, 2]")?;
        if let Some(n) = self.n {
            ensure(n >= 1.0, "n", n, "must be at least 1")?;
        }
        Ok(())
    }

    fn log10_b_factor(&self) -> f64 {
        (1.0 / self.b + 1.0 / (self.b * self.b)).log10()
    }

    fn log10_decay(&self, x: f64) -> f64 {
        -self.eps / (1.0 + self.eps) * x.log10()
    }
}

/// Arrival-side component: `100 σ²_A B^{-1} n^{1-2/α} x^{-1}`.
///
/// Without `n` it is evaluated at `α = 2`, where the `n` factor is 1.
pub fn boundapart(inputs: &BoundInputs, x: f64) -> Result<LogBound> {
    inputs.validate()?;
    ensure(x >= 4.0, "x", x, "must be at least 4")?;
    let n_term = match inputs.n {
        Some(n) => (1.0 - 2.0 / inputs.alpha) * n.log10(),
        None => 0.0,
    };
    Ok(LogBound::from_log10(2.0 + inputs.sigma_sq_a.log10() - inputs.b.log10() + n_term - x.log10()))
}

/// Service-side component:
/// `10^92 ε^{-7} (8 E[S^{1+ε}])^{1/ε} (1 - E[e^{-S}])^{-5} (B^{-1} + B^{-2}) x^{-ε/(1+ε)}`.
pub fn spartbound(inputs: &BoundInputs, x: f64) -> Result<LogBound> {
    inputs.validate()?;
    ensure(x >= 16.0, "x", x, "must be at least 16")?;
    let e = inputs.eps;
    Ok(LogBound::from_log10(
        92.0 - 7.0 * e.log10() + (8.0 * inputs.frac_moment).log10() / e - 5.0 * (1.0 - inputs.laplace_one).log10()
            + inputs.log10_b_factor()
            + inputs.log10_decay(x),
    ))
}

/// Headline bound on `P(L/√n ≥ x)`:
/// `10^100 (ε (1 - E[e^{-S}]))^{-7} (10 E[S^{1+ε}])^{1/ε} (1 + σ²_A) (B^{-1} + B^{-2}) x^{-ε/(1+ε)}`.
pub fn thm1_value(inputs: &BoundInputs, x: f64) -> Result<LogBound> {
    inputs.validate()?;
    ensure(x >= 16.0, "x", x, "must be at least 16")?;
    let e = inputs.eps;
    Ok(LogBound::from_log10(
        100.0 - 7.0 * (e * (1.0 - inputs.laplace_one)).log10()
            + (10.0 * inputs.frac_moment).log10() / e
            + (1.0 + inputs.sigma_sq_a).log10()
            + inputs.log10_b_factor()
            + inputs.log10_decay(x),
    ))
}

/// `exp(-hwr_rate(B, C_A, α) x)`: exact tail of the limiting Levy supremum.
pub fn hwr_tail(b: f64, c_a: f64, alpha: f64, x: f64) -> Result<f64> {
    ensure(x >= 0.0, "x", x, "must be non-negative")?;
    Ok((-hwr_rate(b, c_a, alpha)? * x).exp())
}

/// `exp(c_bs(B, C_S, α_S) x^{α_S-1})`. A large-deviations approximation,
/// not a finite-x bound.
pub fn cbs_tail(b: f64, c_s: f64, alpha_s: f64, x: f64) -> Result<f64> {
    ensure(x >= 0.0, "x", x, "must be non-negative")?;
    Ok((c_bs(b, c_s, alpha_s)? * x.powf(alpha_s - 1.0)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub x: f64,
    pub thm1: LogBound,
    /// Evaluated at `α = 2` unless `n` and `alpha` say otherwise.
    pub boundapart: LogBound,
    pub spartbound: LogBound,
    /// Kingman mean-wait bound at `y = (n - ½Bn^{1/α}) / (n - Bn^{1/α})`.
    pub kingman_mean: Option<f64>,
    pub hwr: Option<f64>,
    /// Approximation only; see [`BoundReport::cbs_is_approximation`].
    pub cbs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub rows: Vec<BoundRow>,
    pub cbs_is_approximation: bool,
}

impl BoundReport {
    /// The assembly check: headline ≥ arrival part + service part per row.
    pub fn pipeline_dominates(&self) -> bool {
        self.rows.iter().all(|r| r.thm1.log10_raw >= log10_sum(r.boundapart.log10_raw, r.spartbound.log10_raw) - 1e-12)
    }
}

/// Evaluates the headline bound and every component at each threshold.
pub fn thm1_bound(inputs: &BoundInputs, xs: &[f64]) -> Result<BoundReport> {
    inputs.validate()?;
    let kingman_mean = match inputs.n {
        Some(n) => {
            let s = n.powf(1.0 / inputs.alpha);
            let lam = n - inputs.b * s;
            ensure(lam > 0.0, "n", n, "must exceed B^{alpha/(alpha-1)}")?;
            Some(kingman((n - 0.5 * inputs.b * s) / lam, inputs.sigma_sq_a)?)
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        rows.push(BoundRow {
            x,
            thm1: thm1_value(inputs, x)?,
            boundapart: boundapart(inputs, x)?,
            spartbound: spartbound(inputs, x)?,
            kingman_mean,
            hwr: inputs.arrival_tail.map(|t| hwr_tail(inputs.b, t.constant, t.index, x)).transpose()?,
            cbs: inputs.service_tail.map(|t| cbs_tail(inputs.b, t.constant, t.index, x)).transpose()?,
        });
    }
    Ok(BoundReport { inputs: *inputs, rows, cbs_is_approximation: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp_inputs() -> BoundInputs {
        BoundInputs::new(1.0, 2.0, 0.5, 1.0, 1.0)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn kingman_values() {
        assert_eq!(kingman(2.0, 1.0).unwrap(), 2.0);
        assert!(rel(kingman(1.1, 1.0).unwrap(), 6.05) < 1e-12);
        assert!(kingman(1.01, 1.0).unwrap() > kingman(1.1, 1.0).unwrap());
        assert!(kingman(1.0, 1.0).is_err());
    }

    #[test]
    fn pooled_reference_value() {
        let p = PooledSupParams { c1: 1.0, c2: 1.0, r1: 2.0, s1: 1.5, r2: 3.0 };
        let b = pooled_sup_bound(p, 100.0, 5.0, 40.0).unwrap();
        let constant = (100.0f64 * 125.0 / 0.25).powi(7);
        let first = 100.0 * 5f64.powf(-1.5) * 40f64.powf(-0.5);
        let second = 1000.0 * 200f64.powf(-1.5);
        assert!(rel(b.log10_constant, constant.log10()) < 1e-12);
        assert!(rel(b.bound.raw(), constant * (first + second)) < 1e-10);
        assert!(rel(10f64.powf(b.log10_first), first) < 1e-12);
        assert!(rel(10f64.powf(b.log10_second), second) < 1e-12);
    }

    #[test]
    fn pooled_first_term_scales_with_n() {
        let p = PooledSupParams { c1: 1.0, c2: 0.0, r1: 2.0, s1: 1.5, r2: 3.0 };
        let a = pooled_sup_bound(p, 100.0, 5.0, 40.0).unwrap();
        let b = pooled_sup_bound(p, 400.0, 5.0, 40.0).unwrap();
        assert!(rel(b.bound.raw() / a.bound.raw(), 4.0) < 1e-10);
        assert_eq!(a.log10_second, f64::NEG_INFINITY);
    }

    #[test]
    fn pooled_rejects_bad_orders() {
        let ok = PooledSupParams { c1: 1.0, c2: 1.0, r1: 2.0, s1: 1.5, r2: 3.0 };
        assert!(pooled_sup_bound(PooledSupParams { s1: 2.5, ..ok }, 100.0, 5.0, 40.0).is_err());
        assert!(pooled_sup_bound(PooledSupParams { s1: 1.0, ..ok }, 100.0, 5.0, 40.0).is_err());
        assert!(pooled_sup_bound(PooledSupParams { r2: 2.0, ..ok }, 100.0, 5.0, 40.0).is_err());
        assert!(pooled_sup_bound(ok, 100.0, 5.0, 7.0).is_err());
    }

    #[test]
    fn small_t_values() {
        assert_eq!(small_t_moment_bound(3.0, 1.0, 0.5, 100.0, 0.0).unwrap().log10_raw, f64::NEG_INFINITY);
        // kt = 1: both branches equal 1.
        let a = small_t_moment_bound(3.0, 1.0, 0.5, 100.0, 0.01).unwrap();
        let expect = 1f64.exp() * (1e5 * 81.0 / 0.5f64).powi(5);
        assert!(rel(a.raw(), expect) < 1e-10);
        let b = small_t_moment_bound(3.0, 1.0, 0.5, 100.0, 1.0).unwrap();
        assert!(rel(b.raw(), expect * 1000.0) < 1e-10);
        assert!(rel(b.raw(), 3.03298e39) < 1e-5);
        assert!(small_t_moment_bound(3.0, 1.0, 1.0, 100.0, 1.0).is_err());
    }

    #[test]
    fn thm1_reference_values() {
        let i = exp_inputs();
        let h = thm1_value(&i, 16.0).unwrap();
        assert!((h.log10_raw - 2.56e103f64.log10()).abs() < 1e-12);
        assert_eq!(h.capped, 1.0);
        let s = spartbound(&i, 16.0).unwrap();
        assert!((s.log10_raw - 2.56e94f64.log10()).abs() < 1e-12);
        let d = thm1_value(&i, 1e8).unwrap().log10_raw - thm1_value(&i, 1e4).unwrap().log10_raw;
        assert!((d + 2.0).abs() < 1e-12);
        assert!(thm1_value(&i, 15.9).is_err());
        let a = boundapart(&i, 16.0).unwrap();
        assert!(rel(a.raw(), 100.0 / 16.0) < 1e-12);
    }

    #[test]
    fn closed_form_tails() {
        assert_eq!(hwr_tail(1.0, 1.0, 1.5, 0.0).unwrap(), 1.0);
        assert_eq!(cbs_tail(1.0, 1.0, 1.5, 0.0).unwrap(), 1.0);
        let x = 4.0 * std::f64::consts::PI;
        assert!(rel(hwr_tail(1.0, 1.0, 1.5, x).unwrap(), (-1f64).exp()) < 1e-9);
        assert!(rel(cbs_tail(1.0, 1.0, 1.5, 100.0).unwrap(), (-5.0 / 3f64.sqrt()).exp()) < 1e-12);
    }

    #[test]
    fn report_columns() {
        let mut i = exp_inputs();
        i.n = Some(100.0);
        i.arrival_tail = Some(TailConstant { index: 1.5, constant: 1.0 });
        i.service_tail = Some(TailConstant { index: 1.5, constant: 1.0 });
        let r = thm1_bound(&i, &[16.0, 32.0, 64.0]).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.cbs_is_approximation);
        assert!(r.pipeline_dominates());
        // y = 95/90.
        let y = 95.0 / 90.0;
        assert!(rel(r.rows[0].kingman_mean.unwrap(), y * y / (2.0 * (y - 1.0))) < 1e-12);
        assert!(r.rows[2].hwr.unwrap() < r.rows[0].hwr.unwrap());
    }

    proptest! {
        #[test]
        fn bounds_nonincreasing(eps in 0.05f64..1.0, b in 0.1f64..10.0, x in 16.0f64..1e6, f in 1.0f64..3.0) {
            let i = BoundInputs::new(eps, 1.0 + f, 0.5, 1.0, b);
            let j = BoundInputs { b: b * 1.5, ..i };
            for g in [thm1_value, spartbound, boundapart] {
                prop_assert!(g(&i, x * 2.0).unwrap().log10_raw <= g(&i, x).unwrap().log10_raw);
                prop_assert!(g(&j, x).unwrap().log10_raw <= g(&i, x).unwrap().log10_raw);
            }
            prop_assert!(hwr_tail(b, 1.0, 1.5, x * 2.0).unwrap() <= hwr_tail(b, 1.0, 1.5, x).unwrap());
            prop_assert!(hwr_tail(b * 1.5, 1.0, 1.5, x).unwrap() <= hwr_tail(b, 1.0, 1.5, x).unwrap());
            prop_assert!(cbs_tail(b * 1.5, 1.0, 1.5, x).unwrap() <= cbs_tail(b, 1.0, 1.5, x).unwrap());
        }
    }
}
