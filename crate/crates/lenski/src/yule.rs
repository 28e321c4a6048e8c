//! Exact distributional laws of the intraday Yule growth and the stopping
//! times that end a day.
//!
//! A population of `n0` founders in which every individual splits
//! independently at rate `r` is a Yule process; its size at time `t` is a
//! shifted negative binomial (each founder's family is geometric with
//! parameter `e^{-rt}` on {1,2,...}). Days end either at the deterministic
//! time at which the *expected* size reaches `gamma * N` (expectation rule)
//! or at the random time the size actually hits `ceil(gamma * N)` (hitting
//! rule).

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Geometric, Poisson};

use crate::error::{Error, Result};

/// Founders above this threshold sample the negative binomial through its
/// gamma-Poisson mixture; below it a plain sum of geometrics is cheaper.
const GEOMETRIC_SUM_CUTOFF: u64 = 64;

/// Relative tolerance of the day-length root finder.
pub const DAY_LENGTH_TOL: f64 = 1e-12;

/// Size law of a Yule population: `founders` individuals splitting at
/// `rate`, observed at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YuleLaw {
    founders: u64,
    rate: f64,
    time: f64,
}

impl YuleLaw {
    pub fn new(founders: u64, rate: f64, time: f64) -> Result<Self> {
        if founders == 0 {
            return Err(Error::invalid("YuleLaw needs at least one founder"));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(format!("YuleLaw rate must be positive, got {rate}")));
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::invalid(format!("YuleLaw time must be nonnegative, got {time}")));
        }
        Ok(Self { founders, rate, time })
    }

    pub fn founders(&self) -> u64 {
        self.founders
    }

    /// Geometric parameter `e^{-rate * time}` of a single founder's family.
    pub fn geometric_param(&self) -> f64 {
        (-self.rate * self.time).exp()
    }

    /// `founders * e^{rate * time}`.
    pub fn mean(&self) -> f64 {
        self.founders as f64 * (self.rate * self.time).exp()
    }

    /// `founders * e^{rt} (e^{rt} - 1)`.
    pub fn variance(&self) -> f64 {
        let g = (self.rate * self.time).exp();
        self.founders as f64 * g * (g - 1.0)
    }

    /// Draws the population size at `time`, exactly in distribution.
    ///
    /// The support is {founders, founders+1, ...}; the draw is the
    /// `founders`-fold convolution of geometrics, never a normal
    /// approximation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        shifted_negative_binomial(self.founders, self.geometric_param(), rng)
    }
}

/// Samples `n0 + NB(n0, p)` where NB counts failures: the end-of-growth size
/// of `n0` independent geometric families with parameter `p`.
///
/// Large founder counts go through the gamma-Poisson mixture (O(1) per
/// draw); small ones sum geometrics directly. Both are exact.
pub fn shifted_negative_binomial<R: Rng + ?Sized>(n0: u64, p: f64, rng: &mut R) -> u64 {
    if n0 == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n0;
    }
    if n0 <= GEOMETRIC_SUM_CUTOFF {
        let geo = Geometric::new(p).expect("p in (0,1)");
        return n0 + (0..n0).map(|_| geo.sample(rng)).sum::<u64>();
    }
    // NB(n0, p) failures == Poisson(lambda) with lambda ~ Gamma(n0, (1-p)/p).
    let gamma = Gamma::new(n0 as f64, (1.0 - p) / p).expect("valid gamma");
    let lambda: f64 = gamma.sample(rng);
    if lambda == 0.0 {
        return n0;
    }
    let poisson = Poisson::new(lambda).expect("valid poisson");
    let failures: f64 = poisson.sample(rng);
    n0 + failures as u64
}

/// Which rule ends a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StoppingRule {
    /// Deterministic day length: first time the expected size reaches
    /// `gamma * N`.
    Expectation,
    /// Random day length: first time the realized size reaches
    /// `ceil(gamma * N)`.
    Hitting,
}

/// A day clock: the deterministic day length together with the rule that
/// produced it. Under the expectation rule with homogeneous rate `r` the
/// length is exactly `ln(gamma) / r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayClock {
    pub sigma: f64,
    pub rule: StoppingRule,
}

impl DayClock {
    pub fn expectation(gamma: f64, rate: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(rate > 0.0) {
            return Err(Error::invalid(format!("rate must be positive, got {rate}")));
        }
        Ok(Self { sigma: gamma.ln() / rate, rule: StoppingRule::Expectation })
    }
}

/// Event-driven simulation of a multi-class pure-birth chain until the total
/// size first reaches `threshold`.
///
/// `founders` lists (count, rate) per class; the next birth in a class of
/// size m and rate r arrives at exponential rate m*r. Returns the hitting
/// time and the class sizes at that time (their sum equals `threshold`
/// exactly, births being unit steps).
pub fn sample_hitting_time<R: Rng + ?Sized>(
    founders: &[(u64, f64)],
    threshold: u64,
    rng: &mut R,
) -> Result<(f64, Vec<u64>)> {
    let mut counts: Vec<u64> = founders.iter().map(|f| f.0).collect();
    let rates: Vec<f64> = founders.iter().map(|f| f.1).collect();
    if rates.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("all class rates must be positive"));
    }
    let mut total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("need at least one founder"));
    }
    if threshold <= total {
        return Err(Error::invalid(format!(
            "threshold {threshold} must exceed initial total {total}"
        )));
    }
    let mut weights: Vec<f64> = counts
        .iter()
        .zip(&rates)
        .map(|(c, r)| *c as f64 * r)
        .collect();
    let mut total_rate: f64 = weights.iter().sum();
    let mut time = 0.0;
    while total < threshold {
        let e: f64 = Exp1.sample(rng);
        time += e / total_rate;
        let mut u = rng.random::<f64>() * total_rate;
        let mut idx = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                idx = i;
                break;
            }
            u -= w;
        }
        counts[idx] += 1;
        weights[idx] += rates[idx];
        total_rate += rates[idx];
        total += 1;
    }
    Ok((time, counts))
}

/// Deterministic day length of a heterogeneous population under the
/// expectation rule: the unique positive root of
/// `sum_c count_c * e^{rate_c * sigma} = gamma * total`.
///
/// Safeguarded Newton iteration on the analytically valid bracket
/// `[ln(gamma)/max_rate, ln(gamma)/min_rate]`; the map is strictly
/// increasing so convergence is unconditional. The returned root has
/// relative residual at most `DAY_LENGTH_TOL`.
pub fn solve_day_length(classes: &[(f64, u64)], gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
    }
    let live: Vec<(f64, f64)> = classes
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|(r, c)| (*r, *c as f64))
        .collect();
    if live.is_empty() {
        return Err(Error::invalid("day length needs a nonempty population"));
    }
    if live.iter().any(|(r, _)| !(*r > 0.0)) {
        return Err(Error::invalid("all rates must be positive"));
    }
    let total: f64 = live.iter().map(|(_, c)| c).sum();
    let target = gamma * total;
    let max_rate = live.iter().fold(f64::MIN, |a, (r, _)| a.max(*r));
    let min_rate = live.iter().fold(f64::MAX, |a, (r, _)| a.min(*r));
    if live.len() == 1 || (max_rate - min_rate).abs() < f64::EPSILON * max_rate {
        return Ok(gamma.ln() / live[0].0);
    }
    let mut lo = gamma.ln() / max_rate;
    let mut hi = gamma.ln() / min_rate;
    let eval = |sigma: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for (r, c) in &live {
            let e = c * (r * sigma).exp();
            g += e;
            dg += r * e;
        }
        (g - target, dg)
    };
    // Count-weighted mean rate gives a first guess accurate to O(spread^2);
    // Newton then converges in a handful of iterations.
    let mean_rate = live.iter().map(|(r, c)| r * c).sum::<f64>() / total;
    let mut sigma = (gamma.ln() / mean_rate).clamp(lo, hi);
    for _ in 0..200 {
        let (f, df) = eval(sigma);
        if f.abs() <= DAY_LENGTH_TOL * target {
            return Ok(sigma);
        }
        if f > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let newton = sigma - f / df;
        sigma = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // Strictly increasing map on a valid bracket: reaching this means the
    // tolerance is finer than f64 resolution for these magnitudes.
    let (f, _) = eval(sigma);
    if f.abs() <= 1e-9 * target {
        Ok(sigma)
    } else {
        Err(Error::RootFinder(format!(
            "day length residual {:.3e} after 200 iterations",
            f / target
        )))
    }
}

/// Day length `sigma_k` of the two-type population: `k` mutants at rate
/// `r + rho` against `n - k` wild types at rate `r`. Monotone decreasing in
/// `k` for `rho > 0`, with `sigma_0 = ln(gamma)/r` and
/// `sigma_n = ln(gamma)/(r + rho)` exactly.
pub fn sigma_k(n: u64, k: u64, r: f64, rho: f64, gamma: f64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds n = {n}")));
    }
    if !(r > 0.0) {
        return Err(Error::invalid(format!("r must be positive, got {r}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("rho must be nonnegative, got {rho}")));
    }
    if !(gamma > 1.0) {
        return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
    }
    if k == 0 || rho == 0.0 {
        return Ok(gamma.ln() / r);
    }
    if k == n {
        return Ok(gamma.ln() / (r + rho));
    }
    solve_day_length(&[(r + rho, k), (r, n - k)], gamma)
}

/// One-day growth factor `e^{(r + rho) * sigma_k}` of the mutant class.
/// Equals `gamma` exactly (up to root tolerance) for `rho = 0` or `k = n`.
pub fn growth_factor(k: u64, n: u64, r: f64, rho: f64, gamma: f64) -> Result<f64> {
    Ok(((r + rho) * sigma_k(n, k, r, rho, gamma)?).exp())
}
