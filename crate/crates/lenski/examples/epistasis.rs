//! Epistatic fitness curves: when a fixation at relative fitness x adds
//! `x^{-q} rho` to the rate, the limit is a power law with exponent
//! `1/(2(1+q))`. Measured late-time log-log slopes of simulated mean
//! fitness against that exponent, for a grid of q.

use lenski::evolution::{run_experiment, ModelParams, Scaling};
use lenski::replicate_rng;
use lenski::stats;
use rayon::prelude::*;

fn main() {
    let n = 5_000u64;
    println!("N = {n}, rho = N^-0.3, mu = 1/N, horizon to t = 8, 24 replicates per q\n");
    println!("{:>5} {:>12} {:>12}", "q", "slope", "1/(2(1+q))");
    for (qi, q) in [0.0, 0.5, 1.0, 2.0].iter().enumerate() {
        let params =
            ModelParams::new(n, 2.0, 1.0, Scaling::Exponent(0.3), Scaling::Exponent(1.0), *q)
                .unwrap();
        let scale = params.rho() * params.rho() * params.mu();
        let horizon = (8.0 / scale).ceil() as u64;
        let replicates = 24u64;
        let trajectories: Vec<_> = (0..replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = replicate_rng(9 + qi as u64, i);
                run_experiment(&params, horizon, horizon / 400, &mut rng).unwrap()
            })
            .collect();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for j in 0..trajectories[0].records.len() {
            let t = trajectories[0].records[j].day as f64 * scale;
            if t >= 2.0 {
                let mean_f: f64 = trajectories
                    .iter()
                    .map(|tr| tr.records[j].fitness)
                    .sum::<f64>()
                    / replicates as f64;
                xs.push(t.ln());
                ys.push(mean_f.ln());
            }
        }
        println!(
            "{q:>5} {:>12.4} {:>12.4}",
            stats::ols_slope(&xs, &ys),
            1.0 / (2.0 * (1.0 + q))
        );
    }
}
