//! Small statistical toolkit shared by the estimators.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error and replication count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let reps = xs.len();
        if reps == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN, reps };
        }
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let std_error = if reps > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (reps as f64 - 1.0) / reps as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self { mean, std_error, reps }
    }

    /// Bernoulli proportion `hits / reps` with the binomial standard error.
    pub fn proportion(hits: usize, reps: usize) -> Self {
        let p = hits as f64 / reps as f64;
        Self { mean: p, std_error: (p * (1.0 - p) / reps as f64).sqrt(), reps }
    }

    /// `true` when `self <= other` holds up to `k` combined standard errors.
    pub fn le_within(&self, other: &Estimate, k: f64) -> bool {
        self.mean <= other.mean + k * self.std_error.hypot(other.std_error)
    }

    /// `true` when `self` is within `k` standard errors of an exact value.
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.std_error
    }
}

/// Sample variance together with a large-sample standard error
/// `sqrt((m4 - s^4) / n)` built from the fourth central moment.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let m2n = m2 / n;
    Estimate { mean: var, std_error: ((m4 - m2n * m2n).max(0.0) / n).sqrt(), reps: xs.len() }
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Empirical quantile `inf{x : F_n(x) >= p}` of a sample.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let k = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub points: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_std_error = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LinearFit { slope, intercept, slope_std_error, points: n })
}

/// Points `(x^gamma, ln P(X > x))` of the empirical tail at `points`
/// quantile levels evenly spaced in `[p_lo, p_hi]`; repeated quantiles and
/// levels with no mass above are skipped.
pub fn log_tail_points(sorted: &[f64], gamma: f64, p_lo: f64, p_hi: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = sorted.len();
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    if n < 2 || points < 2 || !(p_lo < p_hi) {
        return (xs, ys);
    }
    let mut last = f64::NAN;
    for i in 0..points {
        let p = p_lo + (p_hi - p_lo) * i as f64 / (points - 1) as f64;
        let x = quantile_sorted(sorted, p);
        if x == last {
            continue;
        }
        last = x;
        let above = n - sorted.partition_point(|&v| v <= x);
        if above == 0 {
            continue;
        }
        xs.push(x.powf(gamma));
        ys.push((above as f64 / n as f64).ln());
    }
    (xs, ys)
}

/// Fit of `ln P(X > x)` against `x^gamma` over [`log_tail_points`]. A tail
/// of the form `exp(-c x^gamma)` gives slope `-c`.
pub fn log_tail_regression(sorted: &[f64], gamma: f64, p_lo: f64, p_hi: f64, points: usize) -> Option<LinearFit> {
    let (xs, ys) = log_tail_points(sorted, gamma, p_lo, p_hi, points);
    ols(&xs, &ys)
}
