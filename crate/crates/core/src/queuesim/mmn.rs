//! Exact stationary law of the M/M/n queue.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::special::ln_gamma;

/// Stationary law of the number in system `Q` for M/M/n with unit service
/// rate: `p_q ∝ lam^q / q!` for `q <= n`, then geometric with ratio `lam / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmnDistribution {
    pub n: usize,
    pub lam: f64,
    /// `P(Q = q)` for `q = 0..=n`.
    pub head: Vec<f64>,
    pub ratio: f64,
}

/// Solves the birth-death balance equations in log space.
pub fn mmn_exact(n: usize, lam: f64) -> Result<MmnDistribution> {
    ensure(n >= 1, "n", n as f64, "need at least one server")?;
    ensure(lam > 0.0 && lam < n as f64, "lam", lam, "arrival rate must lie in (0, n)")?;
    let ratio = lam / n as f64;
    let ln_lam = lam.ln();
    let logs: Vec<f64> =
        (0..=n).map(|q| q as f64 * ln_lam - ln_gamma(q as f64 + 1.0).expect("positive argument")).collect();
    // Mass at q >= n is p_n / (1 - ratio); fold it into the normaliser.
    let ln_tail = logs[n] - (1.0 - ratio).ln();
    let top = logs.iter().cloned().fold(ln_tail, f64::max);
    let z: f64 = logs[..n].iter().map(|l| (l - top).exp()).sum::<f64>() + (ln_tail - top).exp();
    let ln_z = top + z.ln();
    let head = logs.iter().map(|l| (l - ln_z).exp()).collect();
    Ok(MmnDistribution { n, lam, head, ratio })
}

impl MmnDistribution {
    pub fn pmf(&self, q: usize) -> f64 {
        if q <= self.n {
            self.head[q]
        } else {
            self.head[self.n] * self.ratio.powi((q - self.n) as i32)
        }
    }

    /// `P(Q >= q)`.
    pub fn tail_q(&self, q: usize) -> f64 {
        if q >= self.n {
            self.head[self.n] * self.ratio.powi((q - self.n) as i32) / (1.0 - self.ratio)
        } else {
            (1.0 - self.head[..q].iter().sum::<f64>()).max(0.0)
        }
    }

    /// `P(L >= k)` with `L = (Q - n)^+`.
    pub fn tail_l(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.tail_q(self.n + k)
        }
    }

    /// Erlang-C delay probability `P(Q >= n)`.
    pub fn delay_probability(&self) -> f64 {
        self.tail_q(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_server_is_geometric() {
        let d = mmn_exact(1, 0.5).unwrap();
        for q in 0..20 {
            assert!((d.pmf(q) - 0.5 * 0.5f64.powi(q as i32)).abs() < 1e-15);
            assert!((d.tail_q(q) - 0.5f64.powi(q as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_servers_by_hand() {
        // Balance: p1 = p0, p2 = p0/2, p_{2+k} = p2 2^{-k}; total 3 p0 = 1.
        let d = mmn_exact(2, 1.0).unwrap();
        assert!((d.pmf(0) - 1.0 / 3.0).abs() < 1e-14);
        assert!((d.pmf(1) - 1.0 / 3.0).abs() < 1e-14);
        assert!((d.tail_q(2) - 1.0 / 3.0).abs() < 1e-14);
        for k in 0..10 {
            assert!((d.tail_q(2 + k) - 0.5f64.powi(k as i32) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_unstable() {
        assert!(mmn_exact(3, 3.0).is_err());
        assert!(mmn_exact(0, 0.5).is_err());
    }

    #[test]
    fn large_n_does_not_overflow() {
        let d = mmn_exact(5000, 4900.0).unwrap();
        let total: f64 = d.head[..5000].iter().sum::<f64>() + d.tail_q(5000);
        assert!((total - 1.0).abs() < 1e-12);
        assert!(d.delay_probability() > 0.0 && d.delay_probability() < 1.0);
    }

    proptest! {
        #[test]
        fn normalised_and_geometric(n in 1usize..200, frac in 0.05f64..0.99, k in 0usize..50) {
            let lam = frac * n as f64;
            let d = mmn_exact(n, lam).unwrap();
            let total: f64 = d.head[..n].iter().sum::<f64>() + d.tail_q(n);
            prop_assert!((total - 1.0).abs() < 1e-12);
            let want = d.tail_q(n) * frac.powi(k as i32);
            prop_assert!((d.tail_q(n + k) - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }
}
