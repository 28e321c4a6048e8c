//! Monte Carlo experiments on a single beneficial mutation: fixation
//! probability against the `rho C(gamma) / r` asymptotic, sweep durations,
//! and the three-stage decomposition of a sweep. Also carries the exact
//! neutral oracle: absorbing-chain fixation probabilities from the full
//! transition matrix at small `n`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Discrete, Hypergeometric, NegativeBinomial};

use crate::cannings::{two_type_count_step, TwoTypeParams};
use crate::error::{Error, Result};
use crate::replicate_rng;
use crate::stats;

/// `C(gamma) = gamma ln(gamma) / (gamma - 1)`, the constant governing the
/// fixation probability, the successful-mutation rate and the fitness
/// curve.
pub fn c_of_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::invalid(format!("C(gamma) needs gamma > 1, got {gamma}")));
    }
    Ok(gamma * gamma.ln() / (gamma - 1.0))
}

/// Asymptotic fixation probability `rho C(gamma) / r` of a single mutant.
pub fn theoretical_fixation(rho: f64, r: f64, gamma: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho must be nonnegative"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("r must be positive"));
    }
    Ok(rho * c_of_gamma(gamma)? / r)
}

/// Parameters of a sweep study. `epsilon` sets the stage boundaries
/// `[1, eps n]`, `[eps n, (1-eps) n]`, `[(1-eps) n, n]` and must stay below
/// `min(1/gamma, 1/16)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub day: TwoTypeParams,
    pub epsilon: f64,
}

impl SweepParams {
    pub const DEFAULT_EPSILON: f64 = 0.05;

    pub fn new(n: u64, gamma: f64, r: f64, rho: f64, epsilon: f64) -> Result<Self> {
        let day = TwoTypeParams::new(n, gamma, r, rho)?;
        let cap = (1.0 / gamma).min(1.0 / 16.0);
        if !(epsilon > 0.0 && epsilon < cap) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, min(1/gamma, 1/16)) = (0, {cap}), got {epsilon}"
            )));
        }
        Ok(Self { day, epsilon })
    }

    pub fn with_default_epsilon(n: u64, gamma: f64, r: f64, rho: f64) -> Result<Self> {
        Self::new(n, gamma, r, rho, Self::DEFAULT_EPSILON)
    }

    /// Hard cap on a replicate's length, `1000 rho^{-1.5}` days; the
    /// neutral case falls back to a multiple of the coalescent timescale.
    pub fn day_cap(&self) -> u64 {
        if self.day.rho > 0.0 {
            (1000.0 * self.day.rho.powf(-1.5)).ceil() as u64
        } else {
            10_000 * self.day.n
        }
    }

    /// Threshold of the speed check, `rho^{-1.5}` days.
    pub fn late_threshold(&self) -> f64 {
        if self.day.rho > 0.0 {
            self.day.rho.powf(-1.5)
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn stage1_level(&self) -> u64 {
        (self.epsilon * self.day.n as f64).ceil() as u64
    }

    /// Initial mutant fraction of the middle stage, `ceil(eps n) / n`.
    pub fn stage1_fraction(&self) -> f64 {
        self.stage1_level() as f64 / self.day.n as f64
    }

    pub(crate) fn stage2_level(&self) -> u64 {
        ((1.0 - self.epsilon) * self.day.n as f64).ceil() as u64
    }
}

/// How a single sweep replicate ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepOutcome {
    Fixed,
    Lost,
    Censored,
}

/// Hitting times of one replicate: `t1` is the first day at `eps n`
/// mutants, `t2` the first day at `(1-eps) n`, `end_day` the absorption
/// (or censoring) day.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRecord {
    pub replicate: u64,
    pub t1: Option<u64>,
    pub t2: Option<u64>,
    pub end_day: u64,
    pub outcome: SweepOutcome,
}

/// Point estimate of the fixation probability with its 95% binomial CI and
/// the asymptotic target.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixationEstimate {
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    pub replicates: u64,
    pub theoretical: f64,
}

/// Everything a fixation run produces.
#[derive(Debug, Clone)]
pub struct FixationStudy {
    pub estimate: FixationEstimate,
    pub records: Vec<SweepRecord>,
    pub censored: u64,
    /// Empirical `P(tau > rho^{-1.5})` with `tau` the absorption day.
    pub late_fraction: f64,
}

/// Runs one sweep replicate from a single mutant to absorption.
fn run_sweep(params: &SweepParams, replicate: u64, master_seed: u64) -> SweepRecord {
    let mut rng = replicate_rng(master_seed, replicate);
    let cap = params.day_cap();
    let lvl1 = params.stage1_level();
    let lvl2 = params.stage2_level();
    let mut k = 1u64;
    let mut t1 = None;
    let mut t2 = None;
    let mut day = 0u64;
    loop {
        if k == 0 {
            return SweepRecord { replicate, t1, t2, end_day: day, outcome: SweepOutcome::Lost };
        }
        if k == params.day.n {
            return SweepRecord { replicate, t1, t2, end_day: day, outcome: SweepOutcome::Fixed };
        }
        if day >= cap {
            return SweepRecord { replicate, t1, t2, end_day: day, outcome: SweepOutcome::Censored };
        }
        k = two_type_count_step(k, &params.day, &mut rng).expect("k <= n is maintained");
        day += 1;
        if t1.is_none() && k >= lvl1 {
            t1 = Some(day);
        }
        if t2.is_none() && k >= lvl2 {
            t2 = Some(day);
        }
    }
}

/// Monte Carlo fixation study from `K_0 = 1`, no further mutations.
/// Replicates are independent ChaCha streams of `master_seed`, so the
/// result does not depend on thread scheduling.
pub fn estimate_fixation(
    params: &SweepParams,
    replicates: u64,
    master_seed: u64,
) -> Result<FixationStudy> {
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let records: Vec<SweepRecord> = (0..replicates)
        .into_par_iter()
        .map(|i| run_sweep(params, i, master_seed))
        .collect();
    let fixed = records.iter().filter(|r| r.outcome == SweepOutcome::Fixed).count() as u64;
    let censored = records.iter().filter(|r| r.outcome == SweepOutcome::Censored).count() as u64;
    let late = records
        .iter()
        .filter(|r| r.end_day as f64 > params.late_threshold())
        .count() as u64;
    let p_hat = fixed as f64 / replicates as f64;
    Ok(FixationStudy {
        estimate: FixationEstimate {
            p_hat,
            ci_halfwidth: stats::binomial_ci_halfwidth(p_hat, replicates),
            replicates,
            theoretical: theoretical_fixation(params.day.rho, params.day.r, params.day.gamma)?,
        },
        records,
        censored,
        late_fraction: late as f64 / replicates as f64,
    })
}

/// Distribution summary of one sweep stage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageStats {
    pub mean: f64,
    pub min: u64,
    pub max: u64,
    /// Fraction of fixed runs in which the stage took at most
    /// `rho^{-1.1}` days.
    pub fraction_fast: f64,
}

/// Empirical three-stage decomposition over the fixed records.
#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub fixed_runs: u64,
    pub stage1: StageStats,
    pub stage2: StageStats,
    pub stage3: StageStats,
}

fn summarize_stage(durations: &[u64], fast_threshold: f64) -> StageStats {
    let n = durations.len() as f64;
    StageStats {
        mean: durations.iter().map(|&d| d as f64).sum::<f64>() / n,
        min: durations.iter().copied().min().unwrap_or(0),
        max: durations.iter().copied().max().unwrap_or(0),
        fraction_fast: durations.iter().filter(|&&d| (d as f64) <= fast_threshold).count() as f64 / n,
    }
}

/// Splits every fixed record into `T1`, `T2 - T1` and `tau_fix - T2`.
pub fn stage_decomposition(records: &[SweepRecord], params: &SweepParams) -> Result<StageSummary> {
    let fixed: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.outcome == SweepOutcome::Fixed)
        .collect();
    if fixed.is_empty() {
        return Err(Error::invalid("stage decomposition needs at least one fixed run"));
    }
    let mut s1 = Vec::with_capacity(fixed.len());
    let mut s2 = Vec::with_capacity(fixed.len());
    let mut s3 = Vec::with_capacity(fixed.len());
    for r in &fixed {
        let t1 = r.t1.expect("fixed run passed eps n");
        let t2 = r.t2.expect("fixed run passed (1-eps) n");
        debug_assert!(t1 <= t2 && t2 <= r.end_day);
        s1.push(t1);
        s2.push(t2 - t1);
        s3.push(r.end_day - t2);
    }
    let fast = if params.day.rho > 0.0 {
        params.day.rho.powf(-1.1)
    } else {
        f64::INFINITY
    };
    Ok(StageSummary {
        fixed_runs: fixed.len() as u64,
        stage1: summarize_stage(&s1, fast),
        stage2: summarize_stage(&s2, fast),
        stage3: summarize_stage(&s3, fast),
    })
}

/// Mean rescaled mutant-fraction path `K_{floor(t / rho)} / n` over `runs`
/// replicates started at `ceil(eps n)` mutants, evaluated on `t_grid`.
/// This is the measurement instrument for the logistic middle stage.
pub fn stage2_mean_path(
    params: &SweepParams,
    runs: u64,
    t_grid: &[f64],
    master_seed: u64,
) -> Result<Vec<f64>> {
    if runs == 0 || t_grid.is_empty() {
        return Err(Error::invalid("stage2_mean_path needs runs and a grid"));
    }
    let rho = params.day.rho;
    if !(rho > 0.0) {
        return Err(Error::invalid("stage-2 path needs rho > 0"));
    }
    let days: Vec<u64> = t_grid.iter().map(|t| (t / rho).floor() as u64).collect();
    let max_day = *days.iter().max().unwrap();
    let k0 = params.stage1_level();
    let sums: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(master_seed, i);
            let mut k = k0;
            let mut path = vec![0u64; (max_day + 1) as usize];
            path[0] = k;
            for d in 1..=max_day {
                if k != 0 && k != params.day.n {
                    k = two_type_count_step(k, &params.day, &mut rng).expect("valid step");
                }
                path[d as usize] = k;
            }
            days.iter().map(|&d| path[d as usize] as f64).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; days.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    Ok(sums
        .iter()
        .map(|s| s / (runs as f64 * params.day.n as f64))
        .collect())
}

/// Exact fixation probabilities of the neutral chain (`rho = 0`) for every
/// start state `0..=n`, from the full transition matrix and a dense linear
/// solve. The end-of-day sizes are truncated at combined tail mass `1e-12`,
/// so the entries are exact to that resolution. Intended for small `n`.
///
/// The transition probabilities are assembled from statrs pmfs, keeping
/// this oracle independent of the sampling code it checks.
pub fn neutral_fixation_by_linear_solve(n: u64, gamma: f64) -> Result<Vec<f64>> {
    if n < 2 || n > 64 {
        return Err(Error::invalid("oracle is sized for 2 <= n <= 64"));
    }
    if !(gamma > 1.0) {
        return Err(Error::invalid("gamma must exceed 1"));
    }
    let p = 1.0 / gamma; // e^{-r sigma_0} under the expectation rule
    let dim = (n - 1) as usize;
    // transition[k-1][k'] for interior k, k' in 0..=n
    let mut transition = vec![vec![0.0f64; n as usize + 1]; dim];
    for k in 1..n {
        let row = &mut transition[(k - 1) as usize];
        let nb_m = NegativeBinomial::new(k as f64, p).expect("valid nb");
        let nb_z = NegativeBinomial::new((n - k) as f64, p).expect("valid nb");
        let m_range = truncated_range(&nb_m, k);
        let z_range = truncated_range(&nb_z, n - k);
        for m in m_range.0..=m_range.1 {
            let pm = nb_m.pmf(m - k);
            for z in z_range.0..=z_range.1 {
                let pz = nb_z.pmf(z - (n - k));
                let hyper = Hypergeometric::new(m + z, m, n).expect("valid hypergeometric");
                let lo = n.saturating_sub(z).max(0);
                let hi = m.min(n);
                for kp in lo..=hi {
                    row[kp as usize] += pm * pz * hyper.pmf(kp);
                }
            }
        }
    }
    // (I - Q) h = b with b the one-step probability of hitting n.
    let mut a = vec![vec![0.0f64; dim]; dim];
    let mut b = vec![0.0f64; dim];
    for i in 0..dim {
        for j in 0..dim {
            a[i][j] = (if i == j { 1.0 } else { 0.0 }) - transition[i][j + 1];
        }
        b[i] = transition[i][n as usize];
    }
    let h = solve_dense(&mut a, &mut b)?;
    let mut out = vec![0.0; n as usize + 1];
    out[n as usize] = 1.0;
    for (i, v) in h.iter().enumerate() {
        out[i + 1] = *v;
    }
    Ok(out)
}

/// Smallest range of end-of-day sizes `[shift, hi]` capturing all but
/// `5e-13` of the shifted negative binomial's mass.
fn truncated_range(nb: &NegativeBinomial, shift: u64) -> (u64, u64) {
    let mut cum = 0.0;
    let mut x = 0u64;
    loop {
        cum += nb.pmf(x);
        if cum >= 1.0 - 5e-13 || x > 100_000 {
            return (shift, shift + x);
        }
        x += 1;
    }
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::RootFinder("singular absorbing-chain system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for j in row + 1..n {
            s -= a[row][j] * x[j];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_of_gamma_reference_values() {
        assert!((c_of_gamma(2.0).unwrap() - 2.0 * 2.0f64.ln()).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((c_of_gamma(e).unwrap() - e / (e - 1.0)).abs() < 1e-15);
        // continuity toward gamma -> 1+: x ln x / (x - 1) -> 1
        assert!((c_of_gamma(1.001).unwrap() - 1.0).abs() < 1e-3);
        assert!(c_of_gamma(1.0).is_err());
    }

    #[test]
    fn theoretical_fixation_values() {
        let v = theoretical_fixation(0.1, 1.0, 2.0).unwrap();
        assert!((v - 0.1386294361119891).abs() < 1e-12);
        assert_eq!(theoretical_fixation(0.0, 1.0, 2.0).unwrap(), 0.0);
        let half = theoretical_fixation(0.1, 2.0, 2.0).unwrap();
        assert!((half - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn neutral_linear_solve_gives_k_over_n() {
        let probs = neutral_fixation_by_linear_solve(10, 2.0).unwrap();
        for (k, p) in probs.iter().enumerate() {
            assert!(
                (p - k as f64 / 10.0).abs() < 1e-8,
                "state {k}: {p} vs {}",
                k as f64 / 10.0
            );
        }
    }

    #[test]
    fn neutral_monte_carlo_agrees_with_oracle() {
        let params = SweepParams::with_default_epsilon(10, 2.0, 1.0, 0.0).unwrap();
        let study = estimate_fixation(&params, 40_000, 41).unwrap();
        let exact = 0.1;
        assert!(
            (study.estimate.p_hat - exact).abs() < 1.7 * study.estimate.ci_halfwidth,
            "p_hat {} vs 1/n",
            study.estimate.p_hat
        );
        assert_eq!(study.censored, 0);
    }

    #[test]
    fn p_hat_within_its_ci_in_the_calibrated_regime() {
        // N = 2000, rho = N^-0.3: the asymptotic target sits inside the
        // 95% CI at this replicate count.
        let n = 2000u64;
        let rho = (n as f64).powf(-0.3);
        let params = SweepParams::with_default_epsilon(n, 2.0, 1.0, rho).unwrap();
        let study = estimate_fixation(&params, 2_000, 40).unwrap();
        let e = study.estimate;
        assert!(
            (e.p_hat - e.theoretical).abs() <= e.ci_halfwidth,
            "p_hat {} vs {} (ci {})",
            e.p_hat,
            e.theoretical,
            e.ci_halfwidth
        );
    }

    #[test]
    fn fixation_is_monotone_in_rho_with_common_random_numbers() {
        let mut prev = -1.0;
        for rho in [0.02, 0.05, 0.1] {
            let params = SweepParams::with_default_epsilon(300, 2.0, 1.0, rho).unwrap();
            let study = estimate_fixation(&params, 30_000, 42).unwrap();
            assert!(
                study.estimate.p_hat > prev,
                "p_hat {} not increasing at rho={rho}",
                study.estimate.p_hat
            );
            prev = study.estimate.p_hat;
        }
    }

    #[test]
    fn stage_ordering_and_low_censoring() {
        let params = SweepParams::with_default_epsilon(500, 2.0, 1.0, 0.1).unwrap();
        let study = estimate_fixation(&params, 4_000, 43).unwrap();
        assert!(study.censored as f64 / 4000.0 < 0.01);
        let summary = stage_decomposition(&study.records, &params).unwrap();
        assert!(summary.fixed_runs > 0);
        for r in study.records.iter().filter(|r| r.outcome == SweepOutcome::Fixed) {
            let (t1, t2) = (r.t1.unwrap(), r.t2.unwrap());
            assert!(t1 <= t2 && t2 <= r.end_day);
        }
    }

    #[test]
    fn stage2_reach_probability_grows_with_n() {
        // From eps n mutants the chain reaches (1-eps) n with probability
        // tending to one; compare two sizes.
        let mut fractions = Vec::new();
        for n in [1_000u64, 10_000] {
            let rho = (n as f64).powf(-0.3);
            let params = SweepParams::with_default_epsilon(n, 2.0, 1.0, rho).unwrap();
            let runs = 200u64;
            let reached: u64 = (0..runs)
                .into_par_iter()
                .map(|i| {
                    let mut rng = replicate_rng(44, i);
                    let mut k = params.stage1_level();
                    for _ in 0..params.day_cap() {
                        if k == 0 || k >= params.stage2_level() {
                            break;
                        }
                        k = two_type_count_step(k, &params.day, &mut rng).unwrap();
                    }
                    u64::from(k >= params.stage2_level())
                })
                .sum();
            fractions.push(reached as f64 / runs as f64);
        }
        assert!(fractions[1] >= fractions[0]);
        assert!(fractions[1] > 0.95, "reach fraction {}", fractions[1]);
    }

    #[test]
    fn epsilon_outside_constraint_is_rejected() {
        assert!(SweepParams::new(100, 2.0, 1.0, 0.1, 0.2).is_err());
        assert!(SweepParams::new(100, 20.0, 1.0, 0.1, 0.06).is_err());
        assert!(SweepParams::new(100, 2.0, 1.0, 0.1, 0.05).is_ok());
    }
}
