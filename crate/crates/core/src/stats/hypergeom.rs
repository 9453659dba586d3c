//! Hypergeometric tail probabilities in log space.
//!
//! Point probabilities use the saddle-point form of the binomial density
//! (Stirling remainders plus a deviance term), which keeps full relative
//! precision for populations of millions. Tails are summed from a log-space anchor at the requested point, walking
//! away from the mode with the pmf ratio recurrence until terms stop
//! contributing. Whichever tail lies on the far side of the mean is summed
//! directly; the other is obtained by complement.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const TABLE_LEN: usize = 1024;

fn ln_factorial_table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN];
        for i in 2..TABLE_LEN {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    })
}

/// `ln(n!)`: exact summation below 1024, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return ln_factorial_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // series error is below 1/(1680 x^7)
    x * x.ln() - x
        + 0.5 * (std::f64::consts::TAU * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`, the Stirling remainder.
fn stirling_remainder(n: u64) -> f64 {
    if n <= 15 {
        let x = n as f64;
        return if n == 0 {
            0.0
        } else {
            ln_factorial(n) - (0.5 * (std::f64::consts::TAU * x).ln() + x * x.ln() - x)
        };
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = n as f64;
    let xx = x * x;
    (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
}

/// Deviance term `x ln(x / np) + np - x`, without cancellation near `x = np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let v2 = v * v;
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `ln P(Binomial(n, p) = x)` with `q = 1 - p` given separately.
fn ln_binom_pmf(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if x == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -deviance(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
    }
    if x == n {
        return if q < 0.1 {
            -deviance(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
    }
    let xf = x as f64;
    let lc = stirling_remainder(n)
        - stirling_remainder(x)
        - stirling_remainder(n - x)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = std::f64::consts::TAU.ln() + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Hypergeometric distribution: `draws` items taken without replacement from
/// a population of `total` containing `successes` marked items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypergeometric {
    total: u64,
    successes: u64,
    draws: u64,
}

/// Terms below this fraction of the running sum end a tail walk, as do
/// subnormal terms (walks move away from the mode, so the rest is smaller).
const REL_CUTOFF: f64 = 1e-17;

impl Hypergeometric {
    pub fn new(total: u64, successes: u64, draws: u64) -> Result<Self> {
        if successes > total {
            return Err(Error::invalid(format!(
                "successes {successes} exceed population {total}"
            )));
        }
        if draws > total {
            return Err(Error::invalid(format!(
                "draws {draws} exceed population {total}"
            )));
        }
        Ok(Self {
            total,
            successes,
            draws,
        })
    }

    /// Smallest and largest attainable values.
    pub fn support(&self) -> (u64, u64) {
        let failures = self.total - self.successes;
        (
            self.draws.saturating_sub(failures),
            self.successes.min(self.draws),
        )
    }

    pub fn mean(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.draws as f64 * self.successes as f64 / self.total as f64
        }
    }

    /// `ln P(X = k)`, `-inf` outside the support.
    pub fn ln_pmf(&self, k: u64) -> f64 {
        let (lo, hi) = self.support();
        if k < lo || k > hi {
            return f64::NEG_INFINITY;
        }
        if lo == hi {
            return 0.0;
        }
        // ratio of binomial densities at p = draws / total; each factor
        // is accurate to a few ulps even for populations near 10^7
        let m = self.total as f64;
        let p = self.draws as f64 / m;
        let q = (self.total - self.draws) as f64 / m;
        ln_binom_pmf(k, self.successes, p, q)
            + ln_binom_pmf(self.draws - k, self.total - self.successes, p, q)
            - ln_binom_pmf(self.draws, self.total, p, q)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// `pmf(k + 1) / pmf(k)`
    fn up_ratio(&self, k: u64) -> f64 {
        let (m, big_k, s) = (self.total as f64, self.successes as f64, self.draws as f64);
        let k = k as f64;
        (big_k - k) * (s - k) / ((k + 1.0) * (m - big_k - s + k + 1.0))
    }

    /// `P(X >= k)` summed upward from `k`; `k` must be in the support.
    /// Stops early once the partial sum exceeds `cap`.
    fn upper_sum(&self, k: u64, cap: f64) -> f64 {
        let (_, hi) = self.support();
        let mut term = self.pmf(k);
        let mut acc = 0.0;
        let mut j = k;
        loop {
            acc += term;
            if acc > cap || j >= hi || term <= acc * REL_CUTOFF || term < f64::MIN_POSITIVE {
                return acc;
            }
            term *= self.up_ratio(j);
            j += 1;
        }
    }

    /// `P(X <= k)` summed downward from `k`; `k` must be in the support.
    fn lower_sum(&self, k: u64) -> f64 {
        let (lo, _) = self.support();
        let mut term = self.pmf(k);
        let mut acc = 0.0;
        let mut j = k;
        loop {
            acc += term;
            if j <= lo || term <= acc * REL_CUTOFF || term < f64::MIN_POSITIVE {
                return acc;
            }
            term /= self.up_ratio(j - 1);
            j -= 1;
        }
    }

    /// `P(X <= k)`.
    pub fn cdf(&self, k: i64) -> f64 {
        let (lo, hi) = self.support();
        if k < lo as i64 {
            return 0.0;
        }
        if k >= hi as i64 {
            return 1.0;
        }
        1.0 - self.sf_ge(k + 1)
    }

    /// `P(X >= k)`.
    pub fn sf_ge(&self, k: i64) -> f64 {
        self.sf_ge_capped(k, f64::INFINITY).unwrap_or(1.0)
    }

    /// `P(X >= k)` if it does not exceed `cap`, otherwise `None`.
    ///
    /// When the tail is large the walk stops as soon as the partial sum
    /// passes `cap`, which makes pruning checks cheap.
    pub fn sf_ge_capped(&self, k: i64, cap: f64) -> Option<f64> {
        let (lo, hi) = self.support();
        let tail = if k <= lo as i64 {
            1.0
        } else if k > hi as i64 {
            0.0
        } else if k as f64 > self.mean() {
            self.upper_sum(k as u64, cap)
        } else {
            (1.0 - self.lower_sum(k as u64 - 1)).clamp(0.0, 1.0)
        };
        (tail <= cap).then_some(tail)
    }
}

/// `P(X <= k)` for `X ~ Hypergeometric(total, successes, draws)`.
///
/// Parameter order follows the usual (population, marked, draws) convention.
pub fn hypergeom_cdf(k: i64, total: u64, successes: u64, draws: u64) -> Result<f64> {
    Ok(Hypergeometric::new(total, successes, draws)?.cdf(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integer oracle: numerator and denominator of P(X <= k).
    fn exact_cdf(k: i64, m: u64, big_k: u64, s: u64) -> (u128, u128) {
        fn choose(n: u64, k: u64) -> u128 {
            if k > n {
                return 0;
            }
            let k = k.min(n - k);
            (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
        }
        let num = (0..=s)
            .filter(|&j| (j as i64) <= k)
            .map(|j| choose(big_k, j) * choose(m - big_k, s - j))
            .sum();
        (num, choose(m, s))
    }

    #[test]
    fn empty_lower_tail() {
        assert_eq!(hypergeom_cdf(-1, 10, 5, 5).unwrap(), 0.0);
        assert_eq!(hypergeom_cdf(-1, 0, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_median() {
        assert!((hypergeom_cdf(2, 10, 5, 5).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn matches_exact_rational_near_top() {
        let (num, den) = exact_cdf(4, 10, 5, 5);
        assert_eq!((num, den), (251, 252));
        let got = hypergeom_cdf(4, 10, 5, 5).unwrap();
        assert!((got - 251.0 / 252.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_inconsistent_parameters() {
        assert!(hypergeom_cdf(0, 10, 11, 5).is_err());
        assert!(hypergeom_cdf(0, 10, 5, 11).is_err());
    }

    #[test]
    fn degenerate_populations() {
        assert_eq!(hypergeom_cdf(0, 0, 0, 0).unwrap(), 1.0);
        // all items marked: X == draws
        let h = Hypergeometric::new(7, 7, 3).unwrap();
        assert_eq!(h.cdf(2), 0.0);
        assert_eq!(h.cdf(3), 1.0);
    }

    #[test]
    fn agrees_with_oracle_on_small_populations() {
        for m in 0..=24u64 {
            for big_k in 0..=m {
                for s in 0..=m {
                    for k in -1..=(s as i64 + 1) {
                        let (num, den) = exact_cdf(k, m, big_k, s);
                        let want = num as f64 / den as f64;
                        let got = hypergeom_cdf(k, m, big_k, s).unwrap();
                        assert!(
                            (got - want).abs() <= 1e-9,
                            "cdf({k} | {m},{big_k},{s}) = {got}, want {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ln_factorial_is_continuous_at_table_edge() {
        let below = ln_factorial(1023);
        let above = ln_factorial(1024);
        assert!((above - below - 1024f64.ln()).abs() < 1e-9);
        let direct: f64 = (2..=5000u64).map(|i| (i as f64).ln()).sum();
        assert!((ln_factorial(5000) - direct).abs() / direct < 1e-13);
    }

    #[test]
    fn large_populations_do_not_overflow() {
        let n = 500_000u64;
        let h = Hypergeometric::new(2 * n, n, 1000).unwrap();
        assert!((h.cdf(499) + h.pmf(500) - h.cdf(500)).abs() < 1e-12);
        let p = h.sf_ge(700);
        assert!(p > 0.0 && p < 1e-30);
        assert!((h.sf_ge(500) - 0.5 - h.pmf(500) / 2.0).abs() < 1e-9);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn pmf_matches_high_precision_reference() {
        // log-gamma differences evaluated with 40 significant digits
        let frozen: [(u64, u64, u64, u64, f64); 8] = [
            (1_000_000, 500_000, 1000, 500, -3.679_418_742_177_587_825),
            (1_000_000, 500_000, 1000, 560, -10.896_758_776_784_581_08),
            (1_000_000, 500_000, 1000, 650, -49.377_882_895_389_294_33),
            (1_000_000, 500_000, 1000, 800, -196.381_399_722_964_801_0),
            (1_000_000, 500_000, 1000, 1000, -693.647_180_393_111_717_4),
            (200_000, 100_000, 30_000, 15_000, -5.299_016_772_139_553_270),
            (200_000, 100_000, 30_000, 15_800, -55.513_988_068_422_873_88),
            (200_000, 100_000, 30_000, 17_000, -319.815_400_832_686_527_2),
        ];
        for (m, big_k, s, k, want) in frozen {
            let got = Hypergeometric::new(m, big_k, s).unwrap().ln_pmf(k);
            assert!(
                (got - want).abs() <= 1e-13 * want.abs().max(1.0),
                "k={k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn capped_tail_agrees_or_declines() {
        let h = Hypergeometric::new(2000, 1000, 300).unwrap();
        for k in 100..220 {
            let full = h.sf_ge(k);
            match h.sf_ge_capped(k, 1e-3) {
                Some(p) => assert!((p - full).abs() < 1e-15 && full <= 1e-3),
                None => assert!(full > 1e-3),
            }
        }
    }
}
