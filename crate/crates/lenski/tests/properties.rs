//! Property tests of the deterministic invariants: the day-length root,
//! pgf algebra, curve identities, and fitness bounds, over randomized
//! parameters.

use lenski::cannings::{PopulationState, RateClass};
use lenski::curves::{epistatic_limit, fitness_limit, LimitCurveParams};
use lenski::evolution::relative_fitness;
use lenski::gw::OffspringLaw;
use lenski::sweep::c_of_gamma;
use lenski::yule::{growth_factor, sigma_k};
use proptest::prelude::*;

proptest! {
    #[test]
    fn sigma_k_root_is_bracketed_and_accurate(
        n in 2u64..1_000_000,
        k_frac in 0.0f64..1.0,
        r in 0.1f64..5.0,
        rho in 0.0f64..0.5,
        gamma in 1.01f64..100.0,
    ) {
        let k = (k_frac * n as f64) as u64;
        let s = sigma_k(n, k, r, rho, gamma).unwrap();
        prop_assert!(s >= gamma.ln() / (r + rho) - 1e-12);
        prop_assert!(s <= gamma.ln() / r + 1e-12);
        let residual = k as f64 * ((r + rho) * s).exp()
            + (n - k) as f64 * (r * s).exp()
            - gamma * n as f64;
        prop_assert!(residual.abs() <= 1e-9 * gamma * n as f64);
    }

    #[test]
    fn sigma_k_decreases_in_k(
        n in 10u64..100_000,
        r in 0.1f64..5.0,
        rho in 1e-4f64..0.5,
        gamma in 1.01f64..50.0,
    ) {
        let quarter = sigma_k(n, n / 4, r, rho, gamma).unwrap();
        let half = sigma_k(n, n / 2, r, rho, gamma).unwrap();
        let three_quarter = sigma_k(n, 3 * n / 4, r, rho, gamma).unwrap();
        prop_assert!(quarter >= half && half >= three_quarter);
    }

    #[test]
    fn growth_factor_lies_between_gamma_and_full_advantage(
        n in 10u64..100_000,
        k_frac in 0.0f64..=1.0,
        r in 0.1f64..5.0,
        rho in 0.0f64..0.5,
        gamma in 1.01f64..50.0,
    ) {
        let k = (k_frac * n as f64) as u64;
        let gf = growth_factor(k, n, r, rho, gamma).unwrap();
        let upper = gamma * (rho * gamma.ln() / r).exp();
        prop_assert!(gf >= gamma - 1e-9, "gf {gf} below gamma {gamma}");
        prop_assert!(gf <= upper + 1e-9 * upper, "gf {gf} above {upper}");
    }

    #[test]
    fn pgf_is_a_normalized_increasing_function(
        p in 0.01f64..0.99,
        c in 0.01f64..0.99,
        s in 0.0f64..1.0,
    ) {
        let law = OffspringLaw::new(p, c).unwrap();
        prop_assert!((law.pgf(1.0) - 1.0).abs() < 1e-12);
        let closed = p * (1.0 - c) / (1.0 - (1.0 - p) * (1.0 - c));
        prop_assert!((law.pgf(0.0) - closed).abs() < 1e-12);
        let ds = 1e-6;
        if s + ds <= 1.0 {
            prop_assert!(law.pgf(s + ds) >= law.pgf(s));
        }
        prop_assert!(law.variance() > 0.0);
        prop_assert!(law.third_moment().is_finite());
    }

    #[test]
    fn fitness_squared_is_affine_in_time(
        gamma in 1.01f64..50.0,
        r0 in 0.1f64..5.0,
        t in 0.0f64..100.0,
    ) {
        let params = LimitCurveParams::new(gamma, r0, 0.0).unwrap();
        let f = fitness_limit(t, &params);
        let affine = 1.0 + 2.0 * c_of_gamma(gamma).unwrap() * t / (r0 * r0);
        prop_assert!((f * f - affine).abs() <= 1e-12 * affine.max(1.0));
        prop_assert!((epistatic_limit(t, &params) - f).abs() <= 1e-12 * f);
    }

    #[test]
    fn relative_fitness_respects_rate_bounds(
        n1 in 1u64..500,
        n2 in 1u64..500,
        r1 in 0.1f64..5.0,
        dr in 0.0f64..2.0,
        u in 0.05f64..5.0,
    ) {
        let n = n1 + n2;
        let state = PopulationState::new(
            vec![
                RateClass { rate: r1, count: n1, lineage: 0 },
                RateClass { rate: r1 + dr, count: n2, lineage: 1 },
            ],
            n,
        )
        .unwrap();
        let f = relative_fitness(&state, r1, u).unwrap();
        prop_assert!(f >= 1.0 - 1e-12);
        prop_assert!(f <= (r1 + dr) / r1 + 1e-12);
    }
}
