//! The middle stage of a sweep against its logistic limit: mean rescaled
//! mutant fraction `K_{floor(t/rho)} / N` from `ceil(0.05 N)` mutants,
//! compared with `g' = g (1 - g) ln(gamma) / r`.

use lenski::curves::stage2_logistic;
use lenski::sweep::{stage2_mean_path, SweepParams};

fn main() {
    let n = 10_000u64;
    let rho = (n as f64).powf(-0.3);
    let params = SweepParams::with_default_epsilon(n, 2.0, 1.0, rho).unwrap();
    let t_grid: Vec<f64> = (0..=16).map(|i| i as f64 * 0.5).collect();
    let mean = stage2_mean_path(&params, 100, &t_grid, 4).unwrap();
    let x0 = params.stage1_fraction();
    println!("N = {n}, rho = {rho:.4}, 100 runs from {} mutants\n", (0.05 * n as f64).ceil());
    println!("{:>5} {:>10} {:>10} {:>9}", "t", "simulated", "logistic", "|diff|");
    let mut sup = 0.0f64;
    for (t, m) in t_grid.iter().zip(&mean) {
        let g = stage2_logistic(*t, x0, 1.0, 2.0).unwrap();
        sup = sup.max((m - g).abs());
        println!("{t:>5.1} {m:>10.4} {g:>10.4} {:>9.4}", (m - g).abs());
    }
    println!("\nsup distance {sup:.4}");
}
