//! Inter-arrival and service laws: samplers, residual (equilibrium) laws,
//! alpha-stable variates and exact moments.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure, Error, Result};
use crate::quad::adaptive_simpson;
use crate::special::{c_alpha, gamma_fn};

/// Uniform draw on `(0, 1]`, safe to raise to negative powers.
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Piecewise-linear inverse CDF on an equally spaced probability grid
/// `u_i = i / (m - 1)`, optionally paired with the inverse CDF of its
/// residual law. Both tables are rescaled at construction so the base law
/// has mean one.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedInverseCdf {
    quantiles: Vec<f64>,
    residual: Option<Vec<f64>>,
    source: Option<String>,
    residual_source: Option<String>,
    scale: f64,
}

fn check_table(values: &[f64], name: &'static str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter {
            name,
            value: values.len() as f64,
            reason: "a quantile table needs at least two entries",
        });
    }
    for w in values.windows(2) {
        ensure(w[1] >= w[0], name, w[1], "quantiles must be nondecreasing")?;
    }
    ensure(values[0] >= 0.0, name, values[0], "quantiles must be nonnegative")?;
    let last = values[values.len() - 1];
    ensure(last.is_finite() && last > 0.0, name, last, "top quantile must be finite and positive")?;
    Ok(())
}

fn read_table(path: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(Path::new(path)).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse { input: tok.to_string(), reason: format!("not a number in {path}") })?;
            out.push(v);
        }
    }
    Ok(out)
}

fn interp(table: &[f64], u: f64) -> f64 {
    let pos = u.clamp(0.0, 1.0) * (table.len() - 1) as f64;
    let i = (pos.floor() as usize).min(table.len() - 2);
    let f = pos - i as f64;
    table[i] + f * (table[i + 1] - table[i])
}

/// `P(X > x)` for a piecewise-linear inverse CDF.
fn table_survival(table: &[f64], x: f64) -> f64 {
    let m = table.len() - 1;
    if x < table[0] {
        return 1.0;
    }
    if x >= table[m] {
        return 0.0;
    }
    // Last segment whose left end is <= x.
    let i = table.partition_point(|&q| q <= x).saturating_sub(1).min(m - 1);
    let (a, b) = (table[i], table[i + 1]);
    let frac = if b > a { (x - a) / (b - a) } else { 1.0 };
    1.0 - (i as f64 + frac) / m as f64
}

/// `E[X^p]` under a piecewise-linear inverse CDF, integrated segment by segment.
fn table_power_mean(table: &[f64], p: f64) -> f64 {
    let m = (table.len() - 1) as f64;
    table
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
                a.powf(p)
            } else {
                (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a))
            }
        })
        .sum::<f64>()
        / m
}

fn table_laplace(table: &[f64], theta: f64) -> f64 {
    if theta == 0.0 {
        return 1.0;
    }
    let m = (table.len() - 1) as f64;
    table
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if theta * (b - a) < 1e-8 {
                (-theta * 0.5 * (a + b)).exp()
            } else {
                ((-theta * a).exp() - (-theta * b).exp()) / (theta * (b - a))
            }
        })
        .sum::<f64>()
        / m
}

impl TabulatedInverseCdf {
    /// Builds a table from raw quantiles, rescaling both tables by the
    /// reciprocal of the base mean.
    pub fn new(quantiles: Vec<f64>, residual: Option<Vec<f64>>) -> Result<Self> {
        check_table(&quantiles, "quantiles")?;
        if let Some(r) = &residual {
            check_table(r, "residual")?;
        }
        let mean = table_power_mean(&quantiles, 1.0);
        let scale = 1.0 / mean;
        let rescale = |v: Vec<f64>| v.into_iter().map(|q| q * scale).collect::<Vec<_>>();
        Ok(Self {
            quantiles: rescale(quantiles),
            residual: residual.map(rescale),
            source: None,
            residual_source: None,
            scale,
        })
    }

    /// Reads whitespace- or comma-separated quantiles from disk; `#` starts a comment.
    pub fn from_files(file: &str, residual: Option<&str>) -> Result<Self> {
        let q = read_table(file)?;
        let r = residual.map(read_table).transpose()?;
        let mut t = Self::new(q, r)?;
        t.source = Some(file.to_string());
        t.residual_source = residual.map(str::to_string);
        Ok(t)
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn residual(&self) -> Option<&[f64]> {
        self.residual.as_deref()
    }

    /// Factor applied to the raw tables to reach mean one.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        interp(&self.quantiles, u)
    }
}

/// Law of an inter-arrival or service time.
///
/// The analytic families have closed-form moments; `ParetoMeanOne` has scale
/// `x_m = (alpha - 1) / alpha` so that `P(X > x) = (x_m / x)^alpha` for
/// `x >= x_m` and the mean is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    ParetoMeanOne { alpha: f64 },
    Deterministic { value: f64 },
    Tabulated(Arc<TabulatedInverseCdf>),
}

/// Regular-variation tail `x^index P(X > x) -> constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailConstant {
    pub index: f64,
    pub constant: f64,
}

impl DistributionSpec {
    pub fn exponential() -> Self {
        Self::Exponential { rate: 1.0 }
    }

    pub fn pareto(alpha: f64) -> Self {
        Self::ParetoMeanOne { alpha }
    }

    pub fn deterministic() -> Self {
        Self::Deterministic { value: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { rate } => {
                ensure(rate.is_finite() && rate > 0.0, "rate", rate, "must be finite and positive")
            }
            Self::ParetoMeanOne { alpha } => {
                ensure(alpha.is_finite() && alpha > 1.0, "alpha", alpha, "Pareto tail index must exceed 1")
            }
            Self::Deterministic { value } => {
                ensure(value.is_finite() && value > 0.0, "value", value, "must be finite and positive")
            }
            Self::Tabulated(_) => Ok(()),
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Exponential { .. })
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Deterministic { .. })
    }

    /// Pareto scale `x_m`, if this is the Pareto family.
    pub fn pareto_scale(&self) -> Option<f64> {
        match *self {
            Self::ParetoMeanOne { alpha } => Some((alpha - 1.0) / alpha),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::ParetoMeanOne { .. } => 1.0,
            Self::Deterministic { value } => value,
            Self::Tabulated(ref t) => table_power_mean(&t.quantiles, 1.0),
        }
    }

    /// `Var[X]`; `+inf` for Pareto with `alpha <= 2`.
    pub fn variance(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::ParetoMeanOne { alpha } => {
                if alpha <= 2.0 {
                    f64::INFINITY
                } else {
                    let xm = (alpha - 1.0) / alpha;
                    alpha * xm * xm / ((alpha - 1.0).powi(2) * (alpha - 2.0))
                }
            }
            Self::Deterministic { .. } => 0.0,
            Self::Tabulated(ref t) => {
                let m = self.mean();
                (table_power_mean(&t.quantiles, 2.0) - m * m).max(0.0)
            }
        }
    }

    /// `E[X^p]` for `p >= 0`.
    pub fn power_moment(&self, p: f64) -> Result<f64> {
        ensure(p >= 0.0, "order", p, "moment order must be nonnegative")?;
        match *self {
            Self::Exponential { rate } => Ok(gamma_fn(1.0 + p)? / rate.powf(p)),
            Self::ParetoMeanOne { alpha } => {
                if p >= alpha {
                    return Err(Error::InfiniteMoment { order: p, tail_index: alpha });
                }
                let xm = (alpha - 1.0) / alpha;
                Ok(alpha * xm.powf(p) / (alpha - p))
            }
            Self::Deterministic { value } => Ok(value.powf(p)),
            Self::Tabulated(ref t) => Ok(table_power_mean(&t.quantiles, p)),
        }
    }

    /// `E[X^{1+eps}]`.
    pub fn frac_moment(&self, eps: f64) -> Result<f64> {
        self.power_moment(1.0 + eps)
    }

    /// `E[exp(-theta X)]`. Pareto uses adaptive quadrature of the
    /// inverse-CDF integral `∫_0^1 exp(-theta x_m u^{-1/alpha}) du`.
    pub fn laplace(&self, theta: f64) -> Result<f64> {
        ensure(theta >= 0.0, "theta", theta, "must be nonnegative")?;
        if theta == 0.0 {
            return Ok(1.0);
        }
        Ok(match *self {
            Self::Exponential { rate } => rate / (rate + theta),
            Self::ParetoMeanOne { alpha } => {
                let xm = (alpha - 1.0) / alpha;
                let f = |u: f64| {
                    if u <= 0.0 {
                        0.0
                    } else {
                        (-theta * xm * u.powf(-1.0 / alpha)).exp()
                    }
                };
                let peak = (-theta * xm).exp();
                adaptive_simpson(&f, 0.0, 1.0, 1e-13 * peak / (1.0 + theta))
            }
            Self::Deterministic { value } => (-theta * value).exp(),
            Self::Tabulated(ref t) => table_laplace(&t.quantiles, theta),
        })
    }

    pub fn tail_constant(&self) -> Option<TailConstant> {
        match *self {
            Self::ParetoMeanOne { alpha } => {
                Some(TailConstant { index: alpha, constant: ((alpha - 1.0) / alpha).powf(alpha) })
            }
            _ => None,
        }
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => (-rate * x.max(0.0)).exp(),
            Self::ParetoMeanOne { alpha } => {
                let xm = (alpha - 1.0) / alpha;
                if x < xm {
                    1.0
                } else {
                    (xm / x).powf(alpha)
                }
            }
            Self::Deterministic { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tabulated(ref t) => table_survival(&t.quantiles, x),
        }
    }

    /// Residual law `R(X)` with `P(R > y) = ∫_y^∞ P(X > z) dz / E[X]`.
    pub fn equilibrium(&self) -> Result<EquilibriumLaw> {
        self.validate()?;
        Ok(match *self {
            Self::Exponential { rate } => EquilibriumLaw::Exponential { rate },
            Self::ParetoMeanOne { alpha } => EquilibriumLaw::ParetoResidual { alpha },
            Self::Deterministic { value } => EquilibriumLaw::Uniform { upper: value },
            Self::Tabulated(ref t) => {
                if t.residual.is_none() {
                    return Err(Error::MissingResidualTable);
                }
                EquilibriumLaw::Tabulated(Arc::clone(t))
            }
        })
    }

    /// Full moment summary at `(eps, theta)`; fails when `E[X^{1+eps}]` is infinite.
    pub fn moments(&self, eps: f64, theta: f64) -> Result<MomentSummary> {
        ensure((0.0..=1.0).contains(&eps), "eps", eps, "must lie in [0, 1]")?;
        let variance = self.variance();
        Ok(MomentSummary {
            mean: self.mean(),
            variance,
            sigma_sq: variance,
            eps,
            frac_moment: self.frac_moment(eps)?,
            theta,
            laplace: self.laplace(theta)?,
            tail_constant: self.tail_constant(),
        })
    }
}

impl Distribution<f64> for DistributionSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Self::ParetoMeanOne { alpha } => {
                let xm = (alpha - 1.0) / alpha;
                xm * open_unit(rng).powf(-1.0 / alpha)
            }
            Self::Deterministic { value } => value,
            Self::Tabulated(ref t) => interp(&t.quantiles, rng.random::<f64>()),
        }
    }
}

/// Moments needed by the explicit bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub sigma_sq: f64,
    pub eps: f64,
    /// `E[X^{1+eps}]`.
    pub frac_moment: f64,
    pub theta: f64,
    /// `E[exp(-theta X)]`.
    pub laplace: f64,
    pub tail_constant: Option<TailConstant>,
}

/// Residual (equilibrium) law of a [`DistributionSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumLaw {
    Exponential {
        rate: f64,
    },
    Uniform {
        upper: f64,
    },
    /// Residual of the mean-one Pareto: linear survival `1 - y` below `x_m`,
    /// then `(x_m / y)^{alpha-1} / alpha`.
    ParetoResidual {
        alpha: f64,
    },
    Tabulated(Arc<TabulatedInverseCdf>),
}

impl EquilibriumLaw {
    pub fn survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => (-rate * y).exp(),
            Self::Uniform { upper } => (1.0 - y / upper).max(0.0),
            Self::ParetoResidual { alpha } => {
                let xm = (alpha - 1.0) / alpha;
                if y <= xm {
                    1.0 - y
                } else {
                    (xm / y).powf(alpha - 1.0) / alpha
                }
            }
            Self::Tabulated(ref t) => table_survival(t.residual.as_deref().unwrap_or(&t.quantiles), y),
        }
    }

    /// Inverse of the survival function at `p ∈ (0, 1]`.
    pub fn inverse_survival(&self, p: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => -p.ln() / rate,
            Self::Uniform { upper } => upper * (1.0 - p),
            Self::ParetoResidual { alpha } => {
                if p >= 1.0 / alpha {
                    1.0 - p
                } else {
                    let xm = (alpha - 1.0) / alpha;
                    xm * (alpha * p).powf(-1.0 / (alpha - 1.0))
                }
            }
            Self::Tabulated(ref t) => interp(t.residual.as_deref().unwrap_or(&t.quantiles), 1.0 - p),
        }
    }
}

impl Distribution<f64> for EquilibriumLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            _ => self.inverse_survival(open_unit(rng)),
        }
    }
}

/// Draw from the residual law of `spec`.
pub fn sample_equilibrium<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> Result<f64> {
    Ok(spec.equilibrium()?.sample(rng))
}

/// Alpha-stable law `S_alpha(sigma, beta, mu)` with characteristic function
/// `exp(-sigma^alpha |t|^alpha (1 - i beta sign(t) tan(pi alpha / 2)) + i mu t)`.
///
/// Sampling uses the Chambers-Mallows-Stuck transform. The raw transform
/// of a uniform angle and a unit exponential produces the `beta`-skewed law
/// only after the angular shift `atan(beta tan(pi alpha/2)) / alpha` and the
/// scale correction `(1 + beta^2 tan^2(pi alpha/2))^{1/(2 alpha)}`; both are
/// folded into the constructor so that `x^alpha P(X > x) -> C_alpha sigma^alpha`
/// when `beta = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    alpha: f64,
    sigma: f64,
    beta: f64,
    mu: f64,
    shift: f64,
    scale: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, sigma: f64, beta: f64, mu: f64) -> Result<Self> {
        ensure(alpha > 1.0 && alpha < 2.0, "alpha", alpha, "stable index must lie in (1, 2)")?;
        ensure(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "must be finite and positive")?;
        ensure((-1.0..=1.0).contains(&beta), "beta", beta, "skewness must lie in [-1, 1]")?;
        ensure(mu.is_finite(), "mu", mu, "must be finite")?;
        let t = beta * (0.5 * PI * alpha).tan();
        Ok(Self { alpha, sigma, beta, mu, shift: t.atan() / alpha, scale: (1.0 + t * t).powf(0.5 / alpha) })
    }

    /// Law of `(C_A / C_alpha)^{1/alpha} S_alpha(1, 1, 0)`, the limit of
    /// `n^{-1/alpha} Σ (A_i - 1)` when `x^alpha P(A > x) -> C_A`.
    pub fn domain_limit(alpha: f64, c_a: f64) -> Result<Self> {
        ensure(c_a > 0.0, "C_A", c_a, "must be positive")?;
        Self::new(alpha, (c_a / c_alpha(alpha)?).powf(1.0 / alpha), 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl Distribution<f64> for StableLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let av = a * (v + self.shift);
        let x = self.scale * av.sin() / v.cos().powf(1.0 / a) * ((v - av).cos() / w).powf((1.0 - a) / a);
        self.sigma * x + self.mu
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } if *rate == 1.0 => write!(f, "exp"),
            Self::Exponential { rate } => write!(f, "exp(rate={rate})"),
            Self::ParetoMeanOne { alpha } => write!(f, "pareto(alpha={alpha})"),
            Self::Deterministic { value } if *value == 1.0 => write!(f, "det"),
            Self::Deterministic { value } => write!(f, "det(value={value})"),
            Self::Tabulated(t) => {
                write!(f, "table(file={}", t.source.as_deref().unwrap_or("<inline>"))?;
                if let Some(r) = &t.residual_source {
                    write!(f, ",residual={r}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Grammar: `exp`, `exp(rate=R)`, `pareto(alpha=A)`, `det`, `det(value=V)`,
/// `table(file=PATH[,residual=PATH])`. Whitespace is ignored around tokens.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse { input: s.to_string(), reason: reason.to_string() };
        let s_trim = s.trim();
        let (head, args) = match s_trim.find('(') {
            Some(i) => {
                let rest = s_trim[i + 1..].trim_end();
                let inner = rest.strip_suffix(')').ok_or_else(|| bad("missing closing parenthesis"))?;
                (s_trim[..i].trim(), Some(inner))
            }
            None => (s_trim, None),
        };
        let mut kv = Vec::new();
        if let Some(inner) = args {
            for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (k, v) = part.split_once('=').ok_or_else(|| bad("arguments must be key=value"))?;
                kv.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
            }
        }
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match kv.iter().find(|(k, _)| k == key) {
                Some((_, v)) => v.parse().map_err(|_| bad(&format!("`{key}` is not a number"))),
                None => default.ok_or_else(|| bad(&format!("missing `{key}`"))),
            }
        };
        let allow = |keys: &[&str]| -> Result<()> {
            match kv.iter().find(|(k, _)| !keys.contains(&k.as_str())) {
                Some((k, _)) => Err(bad(&format!("unknown argument `{k}`"))),
                None => Ok(()),
            }
        };
        let spec = match head.to_ascii_lowercase().as_str() {
            "exp" | "exponential" | "m" => {
                allow(&["rate"])?;
                Self::Exponential { rate: num("rate", Some(1.0))? }
            }
            "pareto" => {
                allow(&["alpha"])?;
                Self::ParetoMeanOne { alpha: num("alpha", None)? }
            }
            "det" | "deterministic" | "d" => {
                allow(&["value"])?;
                Self::Deterministic { value: num("value", Some(1.0))? }
            }
            "table" => {
                allow(&["file", "residual"])?;
                let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
                let file = get("file").ok_or_else(|| bad("missing `file`"))?;
                Self::Tabulated(Arc::new(TabulatedInverseCdf::from_files(file, get("residual"))?))
            }
            _ => return Err(bad("unknown family; expected exp, pareto, det or table")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
