//! Neutral genealogy: the pair coalescence probability scales like
//! `2 (1 - 1/gamma) / N`, triple mergers are an order of magnitude down,
//! and rescaled pair coalescence times are asymptotically Exp(1) -- the
//! Kingman limit.

use lenski::genealogy::{estimate_coalescence_probabilities, pair_coalescence_generation};
use lenski::stats;
use lenski::yule::StoppingRule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let gamma = 10.0;
    println!("gamma = {gamma}\n");
    println!("{:>6} {:>12} {:>10} {:>10}", "N", "N * c_hat", "target", "d/c");
    for n in [250u64, 500, 1000] {
        let (pair, triple) =
            estimate_coalescence_probabilities(n, gamma, 40_000, 5, StoppingRule::Expectation)
                .unwrap();
        println!(
            "{n:>6} {:>12.4} {:>10.4} {:>10.5}",
            n as f64 * pair.value,
            2.0 * (1.0 - 1.0 / gamma),
            triple.value / pair.value
        );
    }

    let n = 500u64;
    let c = 2.0 * (1.0 - 1.0 / gamma) / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let times: Vec<f64> = (0..1000)
        .map(|_| {
            pair_coalescence_generation(n, gamma, 100_000_000, &mut rng)
                .unwrap()
                .unwrap() as f64
                * c
        })
        .collect();
    let ks = stats::ks_one_sample(&times, |x| 1.0 - (-x).exp());
    let (mean, _) = stats::mean_and_se(&times);
    println!("\npair coalescence times at N = {n}, rescaled by c_N = {c:.2e}:");
    println!("  mean {mean:.3} (Exp(1) has mean 1)");
    println!("  KS vs Exp(1): statistic {:.4}, p = {:.3}", ks.statistic, ks.p_value);
}
