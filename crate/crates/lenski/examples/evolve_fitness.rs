//! Long-horizon evolution: relative fitness against the square-root limit
//! curve, and the successful-mutation count against its linear-rate limit.
//! Days without standing variation cost O(1), so a million-day horizon is
//! cheap.

use lenski::curves::{fitness_limit, LimitCurveParams};
use lenski::evolution::{run_experiment, ModelParams, Scaling};
use lenski::replicate_rng;
use rayon::prelude::*;

fn main() {
    let params = ModelParams::new(
        5_000,
        2.0,
        1.0,
        Scaling::Exponent(0.3), // rho = N^-0.3
        Scaling::Exponent(1.0), // mu = 1/N
        0.0,
    )
    .unwrap();
    let (rho, mu) = (params.rho(), params.mu());
    let scale = rho * rho * mu;
    let horizon = (2.0 / scale).ceil() as u64;
    let replicates = 32u64;
    println!(
        "N = {}, rho = {rho:.4}, mu = {mu:.1e}, horizon = {horizon} days, {replicates} replicates",
        params.n
    );

    let trajectories: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(8, i);
            run_experiment(&params, horizon, horizon / 10, &mut rng).unwrap()
        })
        .collect();

    let curve = LimitCurveParams::new(2.0, 1.0, 0.0).unwrap();
    println!("\n{:>6} {:>9} {:>9} {:>9}", "t", "mean F", "f(t)", "mean H");
    for j in 0..trajectories[0].records.len() {
        let day = trajectories[0].records[j].day;
        let t = day as f64 * scale;
        let mean_f: f64 =
            trajectories.iter().map(|tr| tr.records[j].fitness).sum::<f64>() / replicates as f64;
        let mean_h: f64 = trajectories
            .iter()
            .map(|tr| tr.records[j].successful_mutations as f64)
            .sum::<f64>()
            / replicates as f64;
        println!("{t:>6.2} {mean_f:>9.4} {:>9.4} {mean_h:>9.2}", fitness_limit(t, &curve));
    }

    let successes: u64 = trajectories.iter().map(|t| t.success_arrival_days().len() as u64).sum();
    println!(
        "\n{successes} successful mutations across all replicates; expected rate C(gamma)/r0 = {:.4} per (rho mu)^-1 days",
        curve.poisson_rate()
    );
}
