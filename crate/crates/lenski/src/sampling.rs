//! Exact hypergeometric sampling for the dilution step.
//!
//! rand_distr's sampler (inverse transform for small mode regions, H2PE
//! ratio-of-uniforms otherwise) covers almost all of the parameter space in
//! O(1), but its inverse-transform set-up computes the boundary pmf with a
//! direct product of factor ratios that overflows for populations around
//! 1e5 and beyond. Day transitions sit in that corner constantly (one
//! mutant among `gamma * N` cells), so when the constructor rejects we fall
//! back to our own inverse transform with the boundary pmf evaluated in
//! log space. Both routes are exact in distribution.

use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Draws from Hypergeometric(total, feature, draws): the number of marked
/// individuals in a uniform sample of `draws` out of `total` containing
/// `feature` marked ones.
pub(crate) fn sample_hypergeometric<R: Rng + ?Sized>(
    total: u64,
    feature: u64,
    draws: u64,
    rng: &mut R,
) -> u64 {
    debug_assert!(feature <= total && draws <= total);
    if feature == 0 || draws == 0 {
        return 0;
    }
    if feature == total {
        return draws;
    }
    if draws == total {
        return feature;
    }
    match rand_distr::Hypergeometric::new(total, feature, draws) {
        Ok(h) => h.sample(rng),
        Err(_) => inverse_transform_log_space(total, feature, draws, rng),
    }
}

/// Inverse-CDF walk from the lower support boundary, with the boundary pmf
/// computed through log-gamma. Only reached when the mode sits within a few
/// steps of the boundary, so the walk is short.
fn inverse_transform_log_space<R: Rng + ?Sized>(
    total: u64,
    feature: u64,
    draws: u64,
    rng: &mut R,
) -> u64 {
    let lo = (draws + feature).saturating_sub(total);
    let hi = feature.min(draws);
    let other = total - feature;
    let ln_p_lo = ln_choose(feature, lo) + ln_choose(other, draws - lo) - ln_choose(total, draws);
    let mut p = ln_p_lo.exp();
    let mut x = lo;
    let mut u = rng.random::<f64>();
    loop {
        if u <= p || x == hi {
            return x;
        }
        u -= p;
        // pmf recurrence one step up in x
        let num = (feature - x) as f64 * (draws - x) as f64;
        let den = (x + 1) as f64 * (other + x + 1 - draws) as f64;
        p *= num / den;
        x += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fallback_matches_rand_distr_where_both_work() {
        let mut r1 = ChaCha8Rng::seed_from_u64(51);
        let mut r2 = ChaCha8Rng::seed_from_u64(52);
        let (total, feature, draws) = (500u64, 120u64, 80u64);
        let a: Vec<f64> = (0..40_000)
            .map(|_| inverse_transform_log_space(total, feature, draws, &mut r1) as f64)
            .collect();
        let h = rand_distr::Hypergeometric::new(total, feature, draws).unwrap();
        let b: Vec<f64> = (0..40_000).map(|_| h.sample(&mut r2) as f64).collect();
        let ks = stats::ks_two_sample(&a, &b);
        assert!(ks.passes_at(0.01), "KS p = {}", ks.p_value);
    }

    #[test]
    fn large_population_small_mode_regime() {
        // The regime rand_distr rejects: huge population, few marked.
        let mut r = ChaCha8Rng::seed_from_u64(53);
        let (total, feature, draws) = (101_000u64, 11u64, 10_000u64);
        let mean = draws as f64 * feature as f64 / total as f64;
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_hypergeometric(total, feature, draws, &mut r) as f64)
            .collect();
        let (m, se) = stats::mean_and_se(&xs);
        assert!((m - mean).abs() < 4.0 * se, "mean {m} vs {mean}");
        assert!(xs.iter().all(|&x| x <= 11.0));
    }

    #[test]
    fn degenerate_cases() {
        let mut r = ChaCha8Rng::seed_from_u64(54);
        assert_eq!(sample_hypergeometric(10, 0, 5, &mut r), 0);
        assert_eq!(sample_hypergeometric(10, 10, 5, &mut r), 5);
        assert_eq!(sample_hypergeometric(10, 3, 10, &mut r), 3);
        assert_eq!(sample_hypergeometric(10, 3, 0, &mut r), 0);
    }

    #[test]
    fn respects_support_bounds() {
        let mut r = ChaCha8Rng::seed_from_u64(55);
        // lower boundary forced: draws + feature > total
        for _ in 0..10_000 {
            let x = sample_hypergeometric(100, 95, 90, &mut r);
            assert!((85..=90).contains(&x));
        }
    }
}
