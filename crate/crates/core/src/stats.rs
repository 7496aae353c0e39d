//! Small statistics helpers for Monte-Carlo checks.

use alloc::vec::Vec;

use crate::math;

/// `3 sqrt(p (1 - p) / n)`, the three-sigma half-width of a frequency.
pub fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * math::sqrt((p * (1.0 - p)).max(0.0) / n as f64)
}

/// Hoeffding three-sigma half-width for the mean of `n` samples in `[0, 1]`:
/// the worst-case standard deviation `1/(2 sqrt n)`, tripled.
pub fn hoeffding_band(n: usize) -> f64 {
    3.0 / (2.0 * math::sqrt(n as f64))
}

/// Chernoff-Hoeffding bound `2 exp(-2 eps^2 r)` on the probability that the
/// mean of `r` samples of a `[0,1]` predicate deviates by more than `eps`.
pub fn hoeffding_tail(eps: f64, r: usize) -> f64 {
    2.0 * math::exp(-2.0 * eps * eps * r as f64)
}

/// Lower-tail bound `exp(-t q / 8)` on `Pr[B(t, q) < t q / 2]`.
pub fn binomial_lower_tail(t: f64, q: f64) -> f64 {
    math::exp(-t * q / 8.0)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max(math::abs(i as f64 / na - j as f64 / nb));
    }
    d
}

/// Critical value of the two-sample KS statistic at significance `alpha`
/// (asymptotic `c(alpha) sqrt((n + m) / (n m))`).
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = math::sqrt(-0.5 * math::ln(alpha / 2.0));
    let (n, m) = (n as f64, m as f64);
    c * math::sqrt((n + m) / (n * m))
}
