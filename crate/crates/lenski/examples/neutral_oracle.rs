//! The exact neutral oracle: at rho = 0 the mutant count is a martingale,
//! so the fixation probability from k copies is exactly k/N. The absorbing
//! chain is solved from the full transition matrix and compared with Monte
//! Carlo.

use lenski::sweep::{estimate_fixation, neutral_fixation_by_linear_solve, SweepParams};

fn main() {
    let n = 10u64;
    let probs = neutral_fixation_by_linear_solve(n, 2.0).unwrap();
    println!("absorbing-chain solve at N = {n}, gamma = 2:");
    println!("{:>3} {:>14} {:>8} {:>10}", "k", "h(k)", "k/N", "error");
    for (k, p) in probs.iter().enumerate() {
        println!("{k:>3} {p:>14.10} {:>8.1} {:>10.1e}", k as f64 / n as f64, p - k as f64 / n as f64);
    }

    let params = SweepParams::with_default_epsilon(n, 2.0, 1.0, 0.0).unwrap();
    let study = estimate_fixation(&params, 100_000, 11).unwrap();
    println!(
        "\nMonte Carlo from one copy: p_hat = {:.5} +- {:.5} (exact 0.1)",
        study.estimate.p_hat, study.estimate.ci_halfwidth
    );
}
