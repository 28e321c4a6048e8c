//! Near-critical Galton-Watson survival: the exact pgf fixed point, the
//! `2 beta / sigma^2` first-order formula, and a Monte Carlo frequency, for
//! the mutant offspring law and its coupling bounds. The survival of the
//! limit law is the branching-process face of the fixation probability
//! `rho C(gamma) / r`.

use lenski::gw::{
    simulate_gw, survival_probability_asymptotic, survival_probability_exact, GwAsymptotics,
    GwOutcome, OffspringLaw,
};
use lenski::sweep::theoretical_fixation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn survival_mc(law: &OffspringLaw, reps: u64, seed: u64) -> f64 {
    let beta = law.mean() - 1.0;
    // |beta| also sets the extinction time scale of a subcritical law
    let horizon = (10.0 / beta.abs().max(1e-9)).ceil() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let survived = (0..reps)
        .filter(|_| matches!(simulate_gw(law, horizon, &mut rng).outcome, GwOutcome::Survived))
        .count();
    survived as f64 / reps as f64
}

fn main() {
    let (n, gamma, r, rho, alpha, eps) = (1_000_000u64, 2.0, 1.0, 1e-2, 0.4, 0.05);
    println!("gamma = {gamma}, r = {r}, rho = {rho}  (bounding laws at N = {n}, alpha = {alpha})\n");
    println!(
        "{:<22} {:>9} {:>9} | {:>9} {:>9} {:>9}",
        "law", "mean-1", "variance", "exact", "2b/s2", "MC(1e5)"
    );
    let rows = [
        ("limit (c = 1/gamma)", OffspringLaw::mutant_limit(gamma, r, rho).unwrap()),
        ("upper (+N^-alpha)", OffspringLaw::mutant_upper(n, gamma, r, rho, alpha).unwrap()),
        ("lower (-N^-alpha)", OffspringLaw::mutant_lower(n, gamma, r, rho, alpha, eps).unwrap()),
    ];
    for (name, law) in rows {
        let asym = GwAsymptotics::from_law(&law);
        println!(
            "{name:<22} {:>9.5} {:>9.5} | {:>9.5} {:>9.5} {:>9.5}",
            asym.beta,
            asym.sigma2,
            survival_probability_exact(&law, 1e-12),
            survival_probability_asymptotic(&asym),
            survival_mc(&law, 100_000, 7),
        );
    }
    println!(
        "\nfixation-probability target rho C(gamma)/r = {:.5}",
        theoretical_fixation(rho, r, gamma).unwrap()
    );
}
