//! Small numeric helpers shared across modules.

use statrs::function::factorial::ln_factorial;

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial pmf `C(n,k) p^k (1-p)^(n-k)`, evaluated in log space.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Fair-coin binomial pmf for all `k = 0..=n`.
///
/// Built from the exact ratio recurrence in log space and normalized, which
/// keeps the row sum within rounding of 1 for `n` in the thousands.
pub fn half_binomial_row(n: u64) -> Vec<f64> {
    let mut logs = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    logs.push(acc);
    for k in 0..n {
        acc += ((n - k) as f64 / (k + 1) as f64).ln();
        logs.push(acc);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    let shift = top + total.ln();
    logs.iter().map(|l| (l - shift).exp()).collect()
}

/// Unbiased sample variance; `None` for fewer than two values.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_row_sums_to_one() {
        for n in [0, 1, 7, 100, 1730] {
            let s: f64 = half_binomial_row(n).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn pmf_edges() {
        assert_eq!(binomial_pmf(5, 0, 0.0), 1.0);
        assert_eq!(binomial_pmf(5, 5, 1.0), 1.0);
        assert!((binomial_pmf(2, 1, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn variance_needs_two_points() {
        assert_eq!(sample_variance(&[1.0]), None);
        assert_eq!(sample_variance(&[1.0, 3.0]), Some(2.0));
    }
}
