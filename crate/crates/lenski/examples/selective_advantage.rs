//! Expected one-day gain of a single mutant: E[K_1 | K_0 = 1] - 1 against
//! the asymptotic selective advantage `rho ln(gamma) / r`. The advantage
//! shrinks as the background rate `r` grows because faster populations
//! exhaust the day sooner.

use lenski::cannings::{expected_next_mutants, two_type_count_step, TwoTypeParams};
use lenski::stats;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 10_000u64;
    let reps = 200_000u64;
    println!("N = {n}, {reps} one-day replicates per row\n");
    println!("{:>6} {:>6} {:>6} | {:>10} {:>10} {:>10}", "gamma", "r", "rho", "measured", "E[M]/gam", "rho ln g/r");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (gamma, r, rho) in [
        (10.0, 1.0, 0.05),
        (2.0, 1.0, 0.05),
        (10.0, 2.0, 0.05),
        (100.0, 1.0, 0.02),
    ] {
        let params = TwoTypeParams::new(n, gamma, r, rho).unwrap();
        let draws: Vec<f64> = (0..reps)
            .map(|_| two_type_count_step(1, &params, &mut rng).unwrap() as f64)
            .collect();
        let (mean, _) = stats::mean_and_se(&draws);
        println!(
            "{gamma:>6} {r:>6} {rho:>6} | {:>10.5} {:>10.5} {:>10.5}",
            mean - 1.0,
            expected_next_mutants(1, &params).unwrap() - 1.0,
            rho * gamma.ln() / r
        );
    }
}
