//! The closed-form limit objects side by side, each cross-checked against
//! direct integration of its defining ODE.

use lenski::curves::{epistatic_limit, fitness_limit, ode_solve, stage2_logistic, LimitCurveParams};

fn main() {
    let base = LimitCurveParams::new(2.0, 1.0, 0.0).unwrap();
    let epi = LimitCurveParams::new(2.0, 1.0, 1.0).unwrap();
    let c = base.c_gamma();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();

    println!("gamma = 2, r0 = 1, C(gamma) = {c:.6}\n");
    println!("{:>5} {:>10} {:>10} {:>10}", "t", "f (q=0)", "h (q=1)", "logistic");
    for &t in grid.iter().step_by(10) {
        println!(
            "{t:>5.1} {:>10.5} {:>10.5} {:>10.5}",
            fitness_limit(t, &base),
            epistatic_limit(t, &epi),
            stage2_logistic(t, 0.05, 1.0, 2.0).unwrap()
        );
    }

    let f_ode = ode_solve(|x| c / x, 1.0, &grid).unwrap();
    let h_ode = ode_solve(|x: f64| c / (x * x * x), 1.0, &grid).unwrap();
    let lambda = 2.0f64.ln();
    let g_ode = ode_solve(|x| lambda * x * (1.0 - x), 0.05, &grid).unwrap();
    let sup = |closed: &dyn Fn(f64) -> f64, ode: &[f64]| {
        grid.iter()
            .zip(ode)
            .map(|(t, x)| (closed(*t) - x).abs())
            .fold(0.0f64, f64::max)
    };
    println!("\nODE cross-checks (sup over the grid):");
    println!("  f: {:.2e}", sup(&|t| fitness_limit(t, &base), &f_ode));
    println!("  h: {:.2e}", sup(&|t| epistatic_limit(t, &epi), &h_ode));
    println!("  g: {:.2e}", sup(&|t| stage2_logistic(t, 0.05, 1.0, 2.0).unwrap(), &g_ode));
}
