//! The experiment drivers behind the CLI: each produces a results table,
//! a self-describing summary (estimates next to their theoretical targets
//! and pass/fail checks), and optionally an event log.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cannings::TwoTypeParams;
use crate::curves::{epistatic_limit, ode_solve, stage2_logistic, LimitCurveParams};
use crate::error::Result;
use crate::evolution::{run_experiment, Trajectory};
use crate::genealogy::{
    estimate_coalescence_probabilities, pair_coalescence_generation,
};
use crate::gw::{
    simulate_gw, survival_probability_asymptotic, survival_probability_exact, GwAsymptotics,
    GwOutcome, OffspringLaw,
};
use crate::runner::config::RunConfig;
use crate::runner::output::Cell;
use crate::stats;
use crate::sweep::{
    estimate_fixation, stage2_mean_path, stage_decomposition, theoretical_fixation, SweepParams,
};
use crate::replicate_rng;
use crate::yule::{sample_hitting_time, StoppingRule, YuleLaw};

pub struct ExperimentResult {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Value,
    pub events: Option<Value>,
}

/// One pass/fail line of a summary: `estimate` against `target` with a
/// relative tolerance scaled by the profile.
fn check_relative(name: &str, estimate: f64, target: f64, tolerance: f64, multiplier: f64) -> Value {
    let rel_error = if target == 0.0 {
        estimate.abs()
    } else {
        (estimate - target).abs() / target.abs()
    };
    json!({
        "name": name,
        "kind": "relative",
        "estimate": estimate,
        "target": target,
        "rel_error": rel_error,
        "tolerance": tolerance,
        "pass": rel_error <= tolerance * multiplier,
    })
}

/// One-sided bound check: `value <= bound * multiplier`.
fn check_bound(name: &str, value: f64, bound: f64, multiplier: f64) -> Value {
    json!({
        "name": name,
        "kind": "upper_bound",
        "estimate": value,
        "target": bound,
        "tolerance": bound,
        "pass": value <= bound * multiplier,
    })
}

/// Significance check: `p_value > alpha` (profiles do not move test
/// significance levels).
fn check_p_value(name: &str, p_value: f64, alpha: f64) -> Value {
    json!({
        "name": name,
        "kind": "p_value",
        "estimate": p_value,
        "target": alpha,
        "tolerance": alpha,
        "pass": p_value > alpha,
    })
}

fn opt_cell(v: Option<u64>) -> Cell {
    match v {
        Some(x) => Cell::UInt(x),
        None => Cell::Text(String::new()),
    }
}

/// Both stopping rules on a neutral day: the realized hitting time of
/// `ceil(gamma n)` versus the deterministic `ln(gamma)/r0`, and the
/// expectation-rule end-of-day size versus `gamma n`.
pub fn neutral_day(cfg: &RunConfig) -> Result<ExperimentResult> {
    let (n, gamma, r0) = (cfg.n, cfg.gamma, cfg.r0);
    let sigma = gamma.ln() / r0;
    let threshold = (gamma * n as f64).ceil() as u64;
    let law = YuleLaw::new(n, r0, sigma)?;
    let samples: Vec<(f64, u64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.master_seed, i);
            let (t, _) = sample_hitting_time(&[(n, r0)], threshold, &mut rng)
                .expect("threshold exceeds n");
            (t, law.sample(&mut rng))
        })
        .collect();
    let rows: Vec<Vec<Cell>> = samples
        .iter()
        .enumerate()
        .map(|(i, (t, z))| vec![Cell::UInt(i as u64), Cell::Float(*t), Cell::UInt(*z)])
        .collect();
    let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let sizes: Vec<f64> = samples.iter().map(|s| s.1 as f64).collect();
    let (mean_t, se_t) = stats::mean_and_se(&times);
    let (mean_z, se_z) = stats::mean_and_se(&sizes);
    let m = cfg.tolerance_profile.multiplier();
    let checks = vec![
        check_relative("hitting_time_mean_vs_sigma", mean_t, sigma, 0.01, m),
        check_relative("end_size_mean_vs_gamma_n", mean_z, gamma * n as f64, 0.01, m),
    ];
    let summary = json!({
        "hitting_time": {"mean": mean_t, "se": se_t, "theoretical_sigma": sigma},
        "expectation_rule_end_size": {"mean": mean_z, "se": se_z, "theoretical": gamma * n as f64},
        "checks": checks,
    });
    Ok(ExperimentResult {
        header: vec!["replicate", "hitting_time", "expectation_rule_end_size"],
        rows,
        summary,
        events: None,
    })
}

/// Fixation probability of a single beneficial mutant.
pub fn fixation(cfg: &RunConfig) -> Result<ExperimentResult> {
    let params = SweepParams::new(cfg.n, cfg.gamma, cfg.r0, cfg.resolved_rho(), cfg.epsilon)?;
    let study = estimate_fixation(&params, cfg.replicates, cfg.master_seed)?;
    let rows: Vec<Vec<Cell>> = study
        .records
        .iter()
        .map(|r| {
            vec![
                Cell::UInt(r.replicate),
                Cell::Text(format!("{:?}", r.outcome)),
                opt_cell(r.t1),
                opt_cell(r.t2),
                Cell::UInt(r.end_day),
            ]
        })
        .collect();
    let est = &study.estimate;
    let m = cfg.tolerance_profile.multiplier();
    let censor_rate = study.censored as f64 / est.replicates as f64;
    let checks = vec![
        check_relative("p_hat_vs_rho_c_gamma_over_r", est.p_hat, est.theoretical, 0.15, m),
        check_bound("late_fraction", study.late_fraction, 0.05, m),
        check_bound("censor_rate", censor_rate, 0.01, m),
    ];
    let summary = json!({
        "fixation": {
            "p_hat": est.p_hat,
            "ci_halfwidth": est.ci_halfwidth,
            "replicates": est.replicates,
            "theoretical": est.theoretical,
        },
        "rho": params.day.rho,
        "late_threshold_days": params.late_threshold(),
        "late_fraction": study.late_fraction,
        "censored": study.censored,
        "checks": checks,
    });
    Ok(ExperimentResult {
        header: vec!["replicate", "outcome", "t1", "t2", "end_day"],
        rows,
        summary,
        events: None,
    })
}

/// Stage decomposition of conditioned sweeps and the rescaled middle-stage
/// path against its logistic limit.
pub fn sweep_stages(cfg: &RunConfig) -> Result<ExperimentResult> {
    let params = SweepParams::new(cfg.n, cfg.gamma, cfg.r0, cfg.resolved_rho(), cfg.epsilon)?;
    let lambda = cfg.gamma.ln() / cfg.r0;
    let x0 = params.stage1_fraction();
    // grid long enough for the logistic to travel from eps to 1 - eps
    let t_upper = 2.0 * ((1.0 - cfg.epsilon) / cfg.epsilon).ln() / lambda;
    let steps = (t_upper / 0.1).ceil() as usize;
    let t_grid: Vec<f64> = (0..=steps).map(|i| i as f64 * 0.1).collect();
    let mean_path = stage2_mean_path(&params, cfg.replicates, &t_grid, cfg.master_seed)?;
    let mut sup = 0.0f64;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (t, frac) in t_grid.iter().zip(&mean_path) {
        let g = stage2_logistic(*t, x0, cfg.r0, cfg.gamma)?;
        sup = sup.max((frac - g).abs());
        rows.push(vec![Cell::Float(*t), Cell::Float(*frac), Cell::Float(g), Cell::Float((frac - g).abs())]);
    }
    // stage durations from unconditioned sweeps at the same parameters
    let study = estimate_fixation(&params, cfg.replicates.max(1000), cfg.master_seed + 1)?;
    let stages = stage_decomposition(&study.records, &params)?;
    let m = cfg.tolerance_profile.multiplier();
    let checks = vec![check_bound("stage2_logistic_sup_distance", sup, 0.05, m)];
    let summary = json!({
        "logistic_sup_distance": sup,
        "x0": x0,
        "lambda": lambda,
        "stages": stages,
        "checks": checks,
    });
    Ok(ExperimentResult {
        header: vec!["t", "mean_mutant_fraction", "logistic", "abs_diff"],
        rows,
        summary,
        events: None,
    })
}

/// Pair/triple coalescence probabilities and the Kingman rescaling of pair
/// coalescence times.
pub fn genealogy(cfg: &RunConfig) -> Result<ExperimentResult> {
    let (pair, triple) = estimate_coalescence_probabilities(
        cfg.n,
        cfg.gamma,
        cfg.replicates,
        cfg.master_seed,
        StoppingRule::Expectation,
    )?;
    let c_asym = pair.asymptotic;
    let max_generations = (200.0 / c_asym).ceil() as u64;
    let generations: Vec<u64> = (0..cfg.ks_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.master_seed ^ 0x9e37_79b9_7f4a_7c15, i);
            pair_coalescence_generation(cfg.n, cfg.gamma, max_generations, &mut rng)
                .expect("valid parameters")
                .expect("coalesces within the cap")
        })
        .collect();
    let rows: Vec<Vec<Cell>> = generations
        .iter()
        .enumerate()
        .map(|(i, g)| vec![Cell::UInt(i as u64), Cell::UInt(*g)])
        .collect();
    let rescaled: Vec<f64> = generations.iter().map(|&g| g as f64 * c_asym).collect();
    let ks = stats::ks_one_sample(&rescaled, |x| 1.0 - (-x).exp());
    let (mean_g, _) = stats::mean_and_se(&rescaled);
    let m = cfg.tolerance_profile.multiplier();
    let nc_target = 2.0 * (1.0 - 1.0 / cfg.gamma);
    let checks = vec![
        check_relative("n_times_pair_coalescence", cfg.n as f64 * pair.value, nc_target, 0.05, m),
        check_bound("triple_over_pair", triple.value / pair.value, 0.05, m),
        check_p_value("kingman_exponential_ks", ks.p_value, 0.01),
    ];
    let summary = json!({
        "pair": {"c_hat": pair.value, "ci_halfwidth": pair.ci_halfwidth,
                 "n_c_hat": cfg.n as f64 * pair.value, "asymptotic_n_c": nc_target},
        "triple": {"d_hat": triple.value, "ci_halfwidth": triple.ci_halfwidth,
                   "d_over_c": triple.value / pair.value},
        "kingman": {"samples": cfg.ks_samples, "mean_rescaled_time": mean_g,
                    "ks_statistic": ks.statistic, "ks_p_value": ks.p_value},
        "checks": checks,
    });
    Ok(ExperimentResult {
        header: vec!["replicate", "pair_coalescence_generation"],
        rows,
        summary,
        events: None,
    })
}

/// Galton-Watson survival: exact pgf fixed point, near-critical asymptote
/// and Monte Carlo frequency for the mutant offspring law.
pub fn gw(cfg: &RunConfig) -> Result<ExperimentResult> {
    let rho = cfg.resolved_rho();
    let law = OffspringLaw::mutant_limit(cfg.gamma, cfg.r0, rho)?;
    let asym = GwAsymptotics::from_law(&law);
    let exact = survival_probability_exact(&law, 1e-12);
    let first_order = survival_probability_asymptotic(&asym);
    let target = theoretical_fixation(rho, cfg.r0, cfg.gamma)?;
    let horizon = (10.0 / asym.beta.abs().max(1e-9)).ceil() as u64;
    let outcomes: Vec<Option<u64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.master_seed, i);
            match simulate_gw(&law, horizon, &mut rng).outcome {
                GwOutcome::ExtinctAt(g) => Some(g),
                GwOutcome::Survived => None,
            }
        })
        .collect();
    let rows: Vec<Vec<Cell>> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            vec![
                Cell::UInt(i as u64),
                Cell::UInt(u64::from(o.is_none())),
                opt_cell(*o),
            ]
        })
        .collect();
    let survived = outcomes.iter().filter(|o| o.is_none()).count() as f64;
    let mc = survived / cfg.replicates as f64;
    let mc_se = (mc * (1.0 - mc) / cfg.replicates as f64).sqrt();
    let m = cfg.tolerance_profile.multiplier();
    let checks = vec![
        check_relative("exact_survival_vs_rho_c_gamma", exact, target, 0.10, m),
        check_bound("mc_vs_exact_distance_in_se", (mc - exact).abs() / mc_se.max(1e-12), 3.0, m),
    ];
    let summary = json!({
        "offspring_law": {"geometric_param": law.geometric_param(), "thinning_prob": law.thinning_prob(),
                          "beta": asym.beta, "sigma2": asym.sigma2},
        "survival": {"exact": exact, "two_beta_over_sigma2": first_order,
                     "target_rho_c_gamma_over_r": target,
                     "mc_frequency": mc, "mc_se": mc_se, "mc_horizon_generations": horizon},
        "checks": checks,
    });
    Ok(ExperimentResult {
        header: vec!["replicate", "survived", "extinct_at"],
        rows,
        summary,
        events: None,
    })
}

/// Long-horizon evolution runs: per-day records, the mean fitness path
/// against its deterministic limit, and the mutation/fixation event log.
pub fn evolve(cfg: &RunConfig) -> Result<ExperimentResult> {
    let params = cfg.model_params()?;
    let horizon = cfg.resolved_horizon();
    let cadence = cfg.resolved_record_every();
    let trajectories: Vec<Trajectory> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.master_seed, i);
            run_experiment(&params, horizon, cadence, &mut rng)
        })
        .collect::<Result<_>>()?;
    let rho = params.rho();
    let mu = params.mu();
    let time_scale = rho * rho * mu; // rescaled t per day
    let mut rows = Vec::new();
    for (i, t) in trajectories.iter().enumerate() {
        for rec in &t.records {
            rows.push(vec![
                Cell::UInt(i as u64),
                Cell::UInt(rec.day),
                Cell::Float(rec.day as f64 * time_scale),
                Cell::Float(rec.fitness),
                Cell::UInt(rec.successful_mutations),
                Cell::UInt(rec.n_classes as u64),
                Cell::UInt(u64::from(rec.interference)),
            ]);
        }
    }
    // mean fitness path across replicates (identical record grids)
    let curve = LimitCurveParams::new(cfg.gamma, cfg.r0, cfg.q)?;
    let grid_days: Vec<u64> = trajectories[0].records.iter().map(|r| r.day).collect();
    let mut sup_distance = 0.0f64;
    let mut mean_path = Vec::with_capacity(grid_days.len());
    for (j, &day) in grid_days.iter().enumerate() {
        let mean_f = trajectories.iter().map(|t| t.records[j].fitness).sum::<f64>()
            / trajectories.len() as f64;
        let t_resc = day as f64 * time_scale;
        let limit = epistatic_limit(t_resc, &curve);
        sup_distance = sup_distance.max((mean_f - limit).abs());
        mean_path.push((t_resc, mean_f, limit));
    }
    // late-time log-log slope of the mean fitness, measured on the upper
    // three quarters of the time range
    let t_end = grid_days.last().copied().unwrap_or(0) as f64 * time_scale;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, f, _) in &mean_path {
        if *t >= t_end / 4.0 && *t > 0.0 {
            xs.push(t.ln());
            ys.push(f.ln());
        }
    }
    let late_slope = if xs.len() >= 2 { stats::ols_slope(&xs, &ys) } else { f64::NAN };
    let total_successes: u64 = trajectories
        .iter()
        .map(|t| t.success_arrival_days().len() as u64)
        .sum();
    let interference_events: u64 = trajectories
        .iter()
        .map(|t| crate::evolution::detect_interference(t).events.len() as u64)
        .sum();
    let m = cfg.tolerance_profile.multiplier();
    let mut checks = vec![check_bound("mean_fitness_sup_distance", sup_distance, 0.10, m)];
    if cfg.q > 0.0 {
        let exponent = 1.0 / (2.0 * (1.0 + cfg.q));
        checks.push(json!({
            "name": "late_time_log_log_slope",
            "kind": "interval",
            "estimate": late_slope,
            "target": exponent,
            "tolerance": 0.05,
            "pass": (late_slope - exponent).abs() <= 0.05 * m,
        }));
    }
    let summary = json!({
        "params": {"n": params.n, "gamma": params.gamma, "r0": params.r0,
                   "rho": rho, "mu": mu, "q": params.q, "u": params.u,
                   "horizon_days": horizon, "record_every": cadence,
                   "replicates": cfg.replicates},
        "fitness_curve": {"sup_distance": sup_distance,
                          "limit_exponent": 1.0 / (2.0 * (1.0 + cfg.q)),
                          "late_slope": late_slope,
                          "poisson_rate_constant": curve.poisson_rate()},
        "successes": {"total": total_successes,
                      "per_replicate": total_successes as f64 / cfg.replicates as f64},
        "interference_events": interference_events,
        "checks": checks,
    });
    let events: Vec<Value> = trajectories
        .iter()
        .enumerate()
        .map(|(i, t)| {
            json!({
                "replicate": i,
                "mutations": t.mutations,
                "resolutions": t.resolutions,
            })
        })
        .collect();
    Ok(ExperimentResult {
        header: vec!["replicate", "day", "t", "F", "H", "n_classes", "interference_flag"],
        rows,
        summary,
        events: Some(Value::Array(events)),
    })
}

/// Plot-ready limit curves, cross-checked against the ODE integrator.
pub fn curves(cfg: &RunConfig) -> Result<ExperimentResult> {
    let params = LimitCurveParams::new(cfg.gamma, cfg.r0, cfg.q)?;
    let steps = (cfg.t_max / cfg.t_step).round() as usize;
    let t_grid: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.t_step).collect();
    let values: Vec<f64> = t_grid.iter().map(|&t| epistatic_limit(t, &params)).collect();
    let rows: Vec<Vec<Cell>> = t_grid
        .iter()
        .zip(&values)
        .map(|(t, v)| vec![Cell::Float(*t), Cell::Float(*v)])
        .collect();
    let c = params.c_gamma();
    let (r0, q) = (cfg.r0, cfg.q);
    let ode = ode_solve(
        move |x: f64| x.powf(-2.0 * q) * c / (r0 * r0 * x),
        1.0,
        &t_grid,
    )?;
    let ode_sup = values
        .iter()
        .zip(&ode)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let m = cfg.tolerance_profile.multiplier();
    let checks = vec![check_bound("closed_form_vs_ode_sup", ode_sup, 1e-8, m)];
    let summary = json!({
        "curve": {"gamma": cfg.gamma, "r0": cfg.r0, "q": cfg.q,
                  "c_gamma": c, "poisson_rate": params.poisson_rate(),
                  "exponent": 1.0 / (2.0 * (1.0 + cfg.q)), "rows": rows.len()},
        "ode_cross_check_sup": ode_sup,
        "checks": checks,
    });
    Ok(ExperimentResult { header: vec!["t", "value"], rows, summary, events: None })
}

/// A quick mean-of-`K_1` probe used by the comparison examples: one day
/// from a single mutant, repeated.
pub fn selective_advantage_probe(
    n: u64,
    gamma: f64,
    r: f64,
    rho: f64,
    replicates: u64,
    master_seed: u64,
) -> Result<(f64, f64)> {
    let params = TwoTypeParams::new(n, gamma, r, rho)?;
    let draws: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(master_seed, i);
            crate::cannings::two_type_count_step(1, &params, &mut rng).map(|k| k as f64)
        })
        .collect::<Result<_>>()?;
    Ok(stats::mean_and_se(&draws))
}
