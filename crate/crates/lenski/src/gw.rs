//! Near-critical Galton-Watson machinery: the mixed binomial-thinned
//! geometric offspring laws that bound the early phase of a sweep, their
//! pgf algebra, exact and asymptotic survival probabilities, forward
//! simulation, and hitting/extinction-time statistics.
//!
//! An offspring draw is `Binomial(G, c)` where `G` is geometric on
//! {1, 2, ...} with parameter `p`: the geometric is one founder's family at
//! the end of a day, the thinning is the dilution. The law is supercritical
//! when `c/p > 1`, and for the laws arising from a beneficial mutation the
//! supercriticality is `beta ~ rho ln(gamma) / r` with offspring variance
//! approaching `2 (gamma - 1) / gamma`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::yule::{shifted_negative_binomial, sigma_k};

/// Generation sizes above this cap end a simulation with an early
/// "survived" verdict.
pub const POPULATION_CAP: u64 = 100_000_000;

/// Mixed binomial-thinned geometric offspring law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffspringLaw {
    geometric_param: f64,
    thinning_prob: f64,
}

impl OffspringLaw {
    pub fn new(geometric_param: f64, thinning_prob: f64) -> Result<Self> {
        if !(geometric_param > 0.0 && geometric_param < 1.0) {
            return Err(Error::invalid(format!(
                "geometric parameter must lie in (0,1), got {geometric_param}"
            )));
        }
        if !(thinning_prob > 0.0 && thinning_prob < 1.0) {
            return Err(Error::invalid(format!(
                "thinning probability must lie in (0,1), got {thinning_prob}"
            )));
        }
        Ok(Self { geometric_param, thinning_prob })
    }

    /// `p = e^{-rate * day_length}` with thinning `c`.
    pub fn from_growth(rate: f64, day_length: f64, thinning: f64) -> Result<Self> {
        Self::new((-rate * day_length).exp(), thinning)
    }

    /// Offspring law of a mutant line in its asymptotic form: the full day
    /// `sigma_0 = ln(gamma)/r` of growth at rate `r + rho`, diluted at
    /// exactly `1/gamma`. Mean `gamma^{rho/r} = 1 + rho ln(gamma)/r + ...`.
    pub fn mutant_limit(gamma: f64, r: f64, rho: f64) -> Result<Self> {
        let sigma0 = sigma_k(1, 0, r, rho, gamma)?;
        Self::from_growth(r + rho, sigma0, 1.0 / gamma)
    }

    /// Upper bounding law of the coupled construction: growth to `sigma_0`,
    /// thinning `1/gamma + n^{-alpha}`.
    pub fn mutant_upper(n: u64, gamma: f64, r: f64, rho: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive"));
        }
        let sigma0 = sigma_k(n, 0, r, rho, gamma)?;
        Self::from_growth(r + rho, sigma0, 1.0 / gamma + (n as f64).powf(-alpha))
    }

    /// Lower bounding law: growth only to `sigma_{ceil(eps n)}`, thinning
    /// `1/gamma - n^{-alpha}`.
    pub fn mutant_lower(
        n: u64,
        gamma: f64,
        r: f64,
        rho: f64,
        alpha: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon must lie in (0,1)"));
        }
        let k_eps = (epsilon * n as f64).ceil() as u64;
        let sig = sigma_k(n, k_eps, r, rho, gamma)?;
        Self::from_growth(r + rho, sig, 1.0 / gamma - (n as f64).powf(-alpha))
    }

    /// Wild-type analogues used in the last phase of a sweep: growth at the
    /// base rate `r` to the day length of a nearly fixed population.
    pub fn wildtype_upper(n: u64, gamma: f64, r: f64, rho: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        let k = ((1.0 - 2.0 * epsilon) * n as f64).ceil() as u64;
        let sig = sigma_k(n, k, r, rho, gamma)?;
        Self::from_growth(r, sig, 1.0 / gamma + (n as f64).powf(-alpha))
    }

    pub fn geometric_param(&self) -> f64 {
        self.geometric_param
    }

    pub fn thinning_prob(&self) -> f64 {
        self.thinning_prob
    }

    /// Offspring mean `c / p`.
    pub fn mean(&self) -> f64 {
        self.thinning_prob / self.geometric_param
    }

    /// Offspring variance `2 c^2 (1-p)/p^2 + c/p - (c/p)^2`.
    pub fn variance(&self) -> f64 {
        let (p, c) = (self.geometric_param, self.thinning_prob);
        2.0 * c * c * (1.0 - p) / (p * p) + c / p - (c / p) * (c / p)
    }

    /// Third raw moment, finite in closed form for every valid law:
    /// `E[X^3] = f'''(1) + 3 f''(1) + f'(1)` with
    /// `f'''(1) = 6 c^3 (1-p)^2 / p^3` and `f''(1) = 2 c^2 (1-p) / p^2`.
    pub fn third_moment(&self) -> f64 {
        let (p, c) = (self.geometric_param, self.thinning_prob);
        let f1 = c / p;
        let f2 = 2.0 * c * c * (1.0 - p) / (p * p);
        let f3 = 6.0 * c * c * c * (1.0 - p) * (1.0 - p) / (p * p * p);
        f3 + 3.0 * f2 + f1
    }

    /// Probability generating function
    /// `f(s) = p (1 - c + c s) / (1 - (1-p)(1 - c + c s))`.
    pub fn pgf(&self, s: f64) -> f64 {
        let (p, c) = (self.geometric_param, self.thinning_prob);
        let u = 1.0 - c + c * s;
        p * u / (1.0 - (1.0 - p) * u)
    }

    /// One parent's offspring count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sample_generation(1, rng)
    }

    /// Total offspring of `parents` independent individuals: the geometric
    /// totals aggregate into a shifted negative binomial and the thinnings
    /// into a single binomial, so one generation costs O(1).
    pub fn sample_generation<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        if parents == 0 {
            return 0;
        }
        let slots = shifted_negative_binomial(parents, self.geometric_param, rng);
        Binomial::new(slots, self.thinning_prob)
            .expect("valid binomial")
            .sample(rng)
    }
}

/// Near-critical summary of an offspring law: `beta` is the offspring mean
/// minus one, `sigma2` the offspring variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwAsymptotics {
    pub beta: f64,
    pub sigma2: f64,
}

impl GwAsymptotics {
    pub fn from_law(law: &OffspringLaw) -> Self {
        debug_assert!(law.third_moment().is_finite());
        Self { beta: law.mean() - 1.0, sigma2: law.variance() }
    }
}

/// First-order survival probability `2 beta / sigma^2` of a near-critical
/// process. For the mutant limit law this equals `rho C(gamma) / r` up to
/// `O(rho)` corrections, which is exactly the fixation probability scale.
pub fn survival_probability_asymptotic(asym: &GwAsymptotics) -> f64 {
    if asym.beta <= 0.0 {
        return 0.0;
    }
    2.0 * asym.beta / asym.sigma2
}

/// Exact survival probability `1 - q`, where `q` is the smallest fixed
/// point of the pgf in [0,1], obtained by monotone iteration from 0 to
/// relative tolerance `tol`. Subcritical and critical laws return 0.
pub fn survival_probability_exact(law: &OffspringLaw, tol: f64) -> f64 {
    if law.mean() <= 1.0 {
        return 0.0;
    }
    let mut q = 0.0f64;
    for _ in 0..50_000_000u64 {
        let next = law.pgf(q);
        if next - q <= tol * next.max(f64::MIN_POSITIVE) {
            return 1.0 - next;
        }
        q = next;
    }
    1.0 - q
}

/// Probability the process is extinct by generation `t`, computed exactly
/// as the `t`-fold pgf iterate at 0.
pub fn extinct_by(law: &OffspringLaw, t: u64) -> f64 {
    let mut q = 0.0f64;
    for _ in 0..t {
        q = law.pgf(q);
    }
    q
}

/// Verdict of a simulated tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwOutcome {
    /// Hit zero at this generation (1-based: the first generation whose
    /// size is zero).
    ExtinctAt(u64),
    /// Still alive at the horizon, or hit the population cap early.
    Survived,
}

/// Generation sizes of one tree started from a single ancestor.
#[derive(Debug, Clone)]
pub struct GwPath {
    /// `sizes[0] = 1`; subsequent entries are generation totals.
    pub sizes: Vec<u64>,
    pub outcome: GwOutcome,
}

/// Runs one tree for at most `max_generations` generations. Reaching
/// [`POPULATION_CAP`] ends the run early with a `Survived` verdict.
pub fn simulate_gw<R: Rng + ?Sized>(
    law: &OffspringLaw,
    max_generations: u64,
    rng: &mut R,
) -> GwPath {
    let mut sizes = vec![1u64];
    let mut size = 1u64;
    for g in 1..=max_generations {
        size = law.sample_generation(size, rng);
        sizes.push(size);
        if size == 0 {
            return GwPath { sizes, outcome: GwOutcome::ExtinctAt(g) };
        }
        if size >= POPULATION_CAP {
            break;
        }
    }
    GwPath { sizes, outcome: GwOutcome::Survived }
}

/// Tail statistics of the reaching and extinction times.
#[derive(Debug, Clone, Copy)]
pub struct TailEstimate {
    /// Fraction of replicates that reached `epsilon_n`.
    pub reach_frequency: f64,
    /// `P(reach time > threshold | reached)`; NaN when nothing reached.
    pub late_reach_given_reach: f64,
    /// `P(extinction time > threshold | extinct)`; NaN when nothing died.
    pub late_extinction_given_extinct: f64,
    /// The generation threshold `beta^{-1-delta}` that was applied.
    pub threshold: f64,
    pub replicates: u64,
}

/// Estimates `P(omega > beta^{-1-delta} | reach epsilon_n)` and
/// `P(upsilon > beta^{-1-delta} | extinct)` where `omega` is the first
/// generation at `epsilon_n` individuals and `upsilon` the extinction time.
/// Subcritical laws report `reach_frequency` near 0 and a plain extinction
/// tail against the same threshold.
pub fn hitting_time_tail(
    law: &OffspringLaw,
    epsilon_n: u64,
    delta: f64,
    replicates: u64,
    master_seed: u64,
) -> TailEstimate {
    use rayon::prelude::*;
    let beta = law.mean() - 1.0;
    let threshold = if beta > 0.0 {
        beta.powf(-1.0 - delta)
    } else {
        // no natural scale for a (sub)critical law; use replicate count
        (replicates as f64).sqrt()
    };
    let hard_cap = (100.0 * threshold).ceil() as u64 + 1_000;
    let results: Vec<(bool, bool, u64)> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::replicate_rng(master_seed, i);
            let mut size = 1u64;
            let mut gen = 0u64;
            loop {
                if size >= epsilon_n {
                    return (true, false, gen);
                }
                if size == 0 {
                    return (false, true, gen);
                }
                if gen >= hard_cap {
                    return (false, false, gen);
                }
                size = law.sample_generation(size, rng_mut(&mut rng));
                gen += 1;
            }
        })
        .collect();
    let mut reached = 0u64;
    let mut late_reach = 0u64;
    let mut extinct = 0u64;
    let mut late_ext = 0u64;
    for (r, e, g) in results {
        if r {
            reached += 1;
            if g as f64 > threshold {
                late_reach += 1;
            }
        } else if e {
            extinct += 1;
            if g as f64 > threshold {
                late_ext += 1;
            }
        }
    }
    TailEstimate {
        reach_frequency: reached as f64 / replicates as f64,
        late_reach_given_reach: late_reach as f64 / reached as f64,
        late_extinction_given_extinct: late_ext as f64 / extinct as f64,
        threshold,
        replicates,
    }
}

fn rng_mut<R: Rng>(rng: &mut R) -> &mut R {
    rng
}
