//! Fixation probability of a beneficial mutation across a selection grid,
//! against the `rho C(gamma) / r` asymptotic, plus the three-stage
//! decomposition of the successful sweeps.

use lenski::sweep::{estimate_fixation, stage_decomposition, SweepParams};

fn main() {
    let n = 2_000u64;
    let (gamma, r) = (2.0, 1.0);
    let reps = 20_000u64;
    println!("N = {n}, gamma = {gamma}, {reps} sweeps per rho\n");
    println!("{:>6} | {:>9} {:>9} {:>9} {:>8}", "rho", "p_hat", "95% ci", "theory", "censored");
    let mut last = None;
    for rho in [0.02, 0.05, 0.1] {
        let params = SweepParams::with_default_epsilon(n, gamma, r, rho).unwrap();
        let study = estimate_fixation(&params, reps, 3).unwrap();
        let e = &study.estimate;
        println!(
            "{rho:>6} | {:>9.5} {:>9.5} {:>9.5} {:>8}",
            e.p_hat, e.ci_halfwidth, e.theoretical, study.censored
        );
        last = Some((study, params));
    }
    let (study, params) = last.unwrap();
    let stages = stage_decomposition(&study.records, &params).unwrap();
    println!("\nsweep stages at rho = 0.1 over {} fixed runs (days):", stages.fixed_runs);
    println!("  entry  [1, eps N):        mean {:>7.1}", stages.stage1.mean);
    println!("  middle [eps N, (1-eps)N): mean {:>7.1}", stages.stage2.mean);
    println!("  finish [(1-eps)N, N]:     mean {:>7.1}", stages.stage3.mean);
}
