//! Binomial rate estimates.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl RateEstimate {
    pub fn new(count: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(count, trials, Z_95);
        let rate = if trials == 0 { 0.0 } else { count as f64 / trials as f64 };
        RateEstimate { count, trials, rate, ci_low, ci_high }
    }

    pub fn covers(&self, p: f64) -> bool {
        (self.ci_low..=self.ci_high).contains(&p)
    }
}

/// Wilson score interval. Returns `(0, 1)` when there are no trials.
pub fn wilson_interval(count: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Clamp so the interval always contains the point estimate despite rounding.
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Binomial standard deviation of the empirical rate around `p`.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Whether `count / trials` lies within `sigmas` standard deviations of `p`.
/// Degenerate rates (`p` of 0 or 1) require an exact match.
pub fn within_sigmas(count: u64, trials: u64, p: f64, sigmas: f64) -> bool {
    if trials == 0 {
        return false;
    }
    let rate = count as f64 / trials as f64;
    (rate - p).abs() <= sigmas * binomial_sigma(p, trials) + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 0 successes of 10: upper limit z^2 / (n + z^2)
        let (lo, hi) = wilson_interval(0, 10, Z_95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z_95 * Z_95 / (10.0 + Z_95 * Z_95)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(10, 10, Z_95);
        assert_eq!(hi, 1.0);
        assert!((lo - 10.0 / (10.0 + Z_95 * Z_95)).abs() < 1e-12);
        // symmetric around 1/2
        let (lo, hi) = wilson_interval(50, 100, Z_95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((hi - 0.5 - Z_95 * (0.25f64 / 100.0 + Z_95 * Z_95 / 40000.0).sqrt() / (1.0 + Z_95 * Z_95 / 100.0)).abs() < 1e-12);
    }

    #[test]
    fn sigma_checks() {
        assert!(within_sigmas(100, 100, 1.0, 3.0));
        assert!(!within_sigmas(99, 100, 1.0, 3.0));
        assert!(within_sigmas(5000, 10000, 0.5, 3.0));
        assert!(!within_sigmas(5200, 10000, 0.5, 3.0));
        assert!(!within_sigmas(0, 0, 0.5, 3.0));
    }

    #[test]
    fn estimate_contains_rate() {
        for (c, t) in [(0, 1), (1, 1), (3, 7), (999, 1000)] {
            let e = RateEstimate::new(c, t);
            assert!(e.covers(e.rate));
        }
    }
}
