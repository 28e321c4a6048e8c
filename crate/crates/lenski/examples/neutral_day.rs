//! One neutral day under both stopping rules: the realized hitting time of
//! `ceil(gamma N)` concentrates at the deterministic day length
//! `ln(gamma)/r`, and the expectation-rule end-of-day size is a shifted
//! negative binomial with mean `gamma N`.
//!
//! Run with `cargo run --release --example neutral_day`.

use lenski::stats;
use lenski::yule::{sample_hitting_time, DayClock, YuleLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 10_000u64;
    let gamma = 2.0;
    let r = 1.0;
    let clock = DayClock::expectation(gamma, r).unwrap();
    println!("N = {n}, gamma = {gamma}, r = {r}");
    println!("deterministic day length sigma = {:.6}", clock.sigma);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let law = YuleLaw::new(n, r, clock.sigma).unwrap();
    let sizes: Vec<f64> = (0..20_000).map(|_| law.sample(&mut rng) as f64).collect();
    let (mean, se) = stats::mean_and_se(&sizes);
    println!(
        "expectation rule: end-of-day size {mean:.1} +- {se:.1} (target {})",
        gamma * n as f64
    );
    println!(
        "                  variance {:.1} (closed form {:.1})",
        stats::variance(&sizes),
        law.variance()
    );

    let threshold = (gamma * n as f64).ceil() as u64;
    let times: Vec<f64> = (0..1_000)
        .map(|_| sample_hitting_time(&[(n, r)], threshold, &mut rng).unwrap().0)
        .collect();
    let (mean_t, se_t) = stats::mean_and_se(&times);
    println!(
        "hitting rule:     time to {threshold} cells {mean_t:.5} +- {se_t:.5} (sigma = {:.5})",
        clock.sigma
    );
}
