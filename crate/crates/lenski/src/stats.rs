//! Small statistical toolbox shared by the estimators, the acceptance suite
//! and the CLI reports: summary statistics, binomial confidence intervals,
//! Kolmogorov-Smirnov tests and a chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean of a slice. Empty input returns NaN.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n-1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// (mean, standard error) in one pass over the data.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), standard_error(xs))
}

/// Half-width of the 95% normal-approximation confidence interval for a
/// binomial proportion estimated from `n` trials.
pub fn binomial_ci_halfwidth(p_hat: f64, n: u64) -> f64 {
    1.96 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Result of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    /// Supremum distance between the compared distribution functions.
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p_value: f64,
    /// Effective sample size entering the asymptotic p-value.
    pub n_effective: f64,
}

impl KsResult {
    pub fn passes_at(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Survival function of the Kolmogorov distribution,
/// `P(sup|B(t)| > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.05 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `data` against the continuous CDF `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> KsResult {
    let mut xs = data.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d = d.max(lo).max(hi);
    }
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
        n_effective: n,
    }
}

/// Two-sample KS test. Ties are handled by comparing the two empirical CDFs
/// at every pooled jump point; for discrete data the asymptotic p-value is
/// conservative, which only makes the distributional-equality assertions in
/// the test-suite stricter.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n_eff.sqrt() * d),
        n_effective: n_eff,
    }
}

/// Chi-square goodness-of-fit test. `observed` are counts, `expected` the
/// matching expected counts (same length, expected > 0). Returns
/// (statistic, p_value) with `len - 1` degrees of freedom.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), expected.len());
    assert!(observed.len() >= 2);
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (observed.len() - 1) as f64;
    let chi = ChiSquared::new(df).expect("valid dof");
    (stat, 1.0 - chi.cdf(stat))
}

/// Ordinary least-squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((mean(&xs) - 2.5).abs() < 1e-15);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Classic table values: K(0.8276) ~ 0.50, K(1.6276) ~ 0.01.
        assert!((kolmogorov_sf(0.8276) - 0.5).abs() < 2e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 2e-4);
    }

    #[test]
    fn ks_uniform_self_test() {
        // Deterministic stratified "sample" from U(0,1) has a tiny KS distance.
        let n = 1000;
        let data: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let res = ks_one_sample(&data, |x| x.clamp(0.0, 1.0));
        assert!(res.statistic < 1.0 / n as f64 + 1e-12);
        assert!(res.p_value > 0.99);
    }

    #[test]
    fn chi_square_on_exact_counts_is_zero() {
        let (stat, p) = chi_square_gof(&[10.0, 20.0, 30.0], &[10.0, 20.0, 30.0]);
        assert!(stat.abs() < 1e-12);
        assert!(p > 0.999);
    }

    #[test]
    fn ols_slope_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((ols_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
