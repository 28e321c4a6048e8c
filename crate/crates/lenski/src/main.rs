//! Thin command-line front end: parses flags, merges them over an optional
//! config file, and hands off to the library's experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lenski::runner::{self, Experiment, RunConfig, ToleranceProfile};

#[derive(Parser)]
#[command(
    name = "lenski",
    version,
    about = "Serial-dilution evolution experiments: simulation and verification against closed-form targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Neutral day: hitting-time vs expectation stopping rule
    NeutralDay(RunArgs),
    /// Fixation probability of a single beneficial mutant
    Fixation(RunArgs),
    /// Three-stage sweep decomposition and the logistic middle stage
    SweepStages(RunArgs),
    /// Pair/triple coalescence and the Kingman rescaling
    Genealogy(RunArgs),
    /// Galton-Watson survival probabilities
    Gw(RunArgs),
    /// Long-horizon mutation-selection runs and the fitness curve
    Evolve(RunArgs),
    /// Closed-form limit curves as plot-ready CSV
    Curves(RunArgs),
    /// Merge completed run directories into a pass/fail report
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; replicate i uses ChaCha stream i of this seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Output directory (results.csv, summary.json, manifest.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (LENSKI_THREADS overrides)
    #[arg(long)]
    threads: Option<usize>,
    /// Tolerance profile for the summary checks: strict|default|loose
    #[arg(long)]
    tolerance_profile: Option<String>,
    /// Population size N
    #[arg(long)]
    n: Option<u64>,
    /// Daily growth capacity factor (> 1)
    #[arg(long)]
    gamma: Option<f64>,
    /// Ancestral reproduction rate
    #[arg(long)]
    r0: Option<f64>,
    /// Explicit selection increment rho (overrides --b)
    #[arg(long)]
    rho: Option<f64>,
    /// Selection exponent: rho = N^-b
    #[arg(long)]
    b: Option<f64>,
    /// Explicit per-day mutation probability (overrides --a)
    #[arg(long)]
    mu: Option<f64>,
    /// Mutation exponent: mu = N^-a
    #[arg(long)]
    a: Option<f64>,
    /// Epistasis exponent q (> -1); 0 is the additive model
    #[arg(long)]
    q: Option<f64>,
    /// Fitness measurement time (defaults to ln(gamma)/r0)
    #[arg(long)]
    u: Option<f64>,
    /// Sweep stage boundary fraction
    #[arg(long)]
    epsilon: Option<f64>,
    /// Coupling band exponent for diagnostics
    #[arg(long)]
    alpha: Option<f64>,
    /// Evolve horizon in days (defaults to 2 rho^-2 mu^-1)
    #[arg(long)]
    horizon: Option<u64>,
    /// Record cadence in days
    #[arg(long)]
    record_every: Option<u64>,
    /// Coalescence-time samples for the Kingman KS test
    #[arg(long)]
    ks_samples: Option<u64>,
    /// Curve grid end
    #[arg(long)]
    t_max: Option<f64>,
    /// Curve grid step
    #[arg(long)]
    t_step: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Completed run directories (same experiment type)
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
    /// Where to write comparison.json (defaults to stdout only)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tolerance_profile: Option<String>,
}

fn build_config(experiment: Experiment, args: &RunArgs) -> lenski::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    cfg.experiment = experiment;
    macro_rules! set_opt {
        ($field:ident) => {
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        };
    }
    set_opt!(n);
    set_opt!(gamma);
    set_opt!(r0);
    set_opt!(b);
    set_opt!(a);
    set_opt!(q);
    set_opt!(epsilon);
    set_opt!(alpha);
    set_opt!(replicates);
    set_opt!(ks_samples);
    set_opt!(t_max);
    set_opt!(t_step);
    if let Some(v) = args.rho {
        cfg.rho = Some(v);
    }
    if let Some(v) = args.mu {
        cfg.mu = Some(v);
    }
    if let Some(v) = args.u {
        cfg.u = Some(v);
    }
    if let Some(v) = args.horizon {
        cfg.horizon = Some(v);
    }
    if let Some(v) = args.record_every {
        cfg.record_every = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(p) = &args.tolerance_profile {
        cfg.tolerance_profile = ToleranceProfile::parse(p)?;
    }
    cfg.finalize()?;
    Ok(cfg)
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> lenski::Result<()> {
    let cfg = build_config(experiment, args)?;
    let artifacts = runner::run(&cfg)?;
    println!(
        "wrote {}",
        artifacts.output_dir.join("results.csv").display()
    );
    if let Some(checks) = artifacts.summary.get("checks").and_then(|v| v.as_array()) {
        for c in checks {
            let name = c.get("name").and_then(|v| v.as_str()).unwrap_or("?");
            let pass = c.get("pass").and_then(|v| v.as_bool()).unwrap_or(false);
            println!("{} {}", if pass { "[PASS]" } else { "[FAIL]" }, name);
        }
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> lenski::Result<()> {
    let profile = match &args.tolerance_profile {
        Some(p) => ToleranceProfile::parse(p)?,
        None => ToleranceProfile::Default,
    };
    let report = runner::compare(&args.dirs, profile)?;
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        runner::output::write_json(&out.join("comparison.json"), &report)?;
    }
    for row in report.get("table").and_then(|v| v.as_array()).cloned().unwrap_or_default() {
        println!(
            "{} {} ({}): estimate {} vs target {}",
            if row.get("pass").and_then(|v| v.as_bool()).unwrap_or(false) { "[PASS]" } else { "[FAIL]" },
            row.get("check").and_then(|v| v.as_str()).unwrap_or("?"),
            row.get("run").and_then(|v| v.as_str()).unwrap_or("?"),
            row.get("estimate").and_then(|v| v.as_f64()).unwrap_or(f64::NAN),
            row.get("target").and_then(|v| v.as_f64()).unwrap_or(f64::NAN),
        );
    }
    for row in report.get("cross_run").and_then(|v| v.as_array()).cloned().unwrap_or_default() {
        println!(
            "{} {}",
            if row.get("pass").and_then(|v| v.as_bool()).unwrap_or(false) { "[PASS]" } else { "[FAIL]" },
            row.get("check").and_then(|v| v.as_str()).unwrap_or("?"),
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::NeutralDay(a) => run_experiment(Experiment::NeutralDay, a),
        Command::Fixation(a) => run_experiment(Experiment::Fixation, a),
        Command::SweepStages(a) => run_experiment(Experiment::SweepStages, a),
        Command::Genealogy(a) => run_experiment(Experiment::Genealogy, a),
        Command::Gw(a) => run_experiment(Experiment::Gw, a),
        Command::Evolve(a) => run_experiment(Experiment::Evolve, a),
        Command::Curves(a) => run_experiment(Experiment::Curves, a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(runner::exit_code_for(&err) as u8)
        }
    }
}
