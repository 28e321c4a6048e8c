//! One full day of the interday dynamics: intraday Yule growth of every
//! rate class, then dilution back to `N` founders by uniform sampling.
//!
//! The two-type day is available in two equivalent forms: the direct one
//! (negative binomial end-of-day sizes, then a hypergeometric sample) and a
//! sequential-sampling form that lists the mutant individuals first and
//! accepts each with the exact conditional probability. The two agree in
//! distribution; the sequential form is what couples the chain to the
//! bounding Galton-Watson processes, realized here as the triple chain.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::sampling::sample_hypergeometric;
use crate::yule::{growth_factor, shifted_negative_binomial, sigma_k, solve_day_length};

/// One rate class: `count` individuals reproducing at `rate`, labelled by
/// the mutation lineage that founded the class.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RateClass {
    pub rate: f64,
    pub count: u64,
    pub lineage: u64,
}

/// Start-of-day population: rate classes whose counts sum to `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    classes: Vec<RateClass>,
    n: u64,
}

impl PopulationState {
    pub fn new(classes: Vec<RateClass>, n: u64) -> Result<Self> {
        if classes.iter().map(|c| c.count).sum::<u64>() != n {
            return Err(Error::invalid("class counts must sum to n"));
        }
        if classes.iter().any(|c| !(c.rate > 0.0)) {
            return Err(Error::invalid("all rates must be positive"));
        }
        let mut ids: Vec<u64> = classes.iter().map(|c| c.lineage).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != classes.len() {
            return Err(Error::invalid("lineage ids must be unique per class"));
        }
        Ok(Self { classes, n })
    }

    /// Homogeneous population of `n` individuals at `rate`, lineage 0.
    pub fn homogeneous(n: u64, rate: f64) -> Result<Self> {
        Self::new(vec![RateClass { rate, count: n, lineage: 0 }], n)
    }

    pub fn classes(&self) -> &[RateClass] {
        &self.classes
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn is_homogeneous_in_rate(&self) -> bool {
        self.classes
            .windows(2)
            .all(|w| (w[0].rate - w[1].rate).abs() <= f64::EPSILON * w[0].rate.abs())
    }

    pub fn min_rate(&self) -> f64 {
        self.classes.iter().fold(f64::INFINITY, |a, c| a.min(c.rate))
    }

    pub fn max_rate(&self) -> f64 {
        self.classes.iter().fold(f64::NEG_INFINITY, |a, c| a.max(c.rate))
    }

    pub fn count_of_lineage(&self, lineage: u64) -> u64 {
        self.classes
            .iter()
            .filter(|c| c.lineage == lineage)
            .map(|c| c.count)
            .sum()
    }
}

/// What a single day produced: end-of-day class sizes, the day length that
/// was applied, and the diluted population that founds the next day.
#[derive(Debug, Clone)]
pub struct DayOutcome {
    pub end_sizes: Vec<u64>,
    pub day_length: f64,
    pub post_sample: PopulationState,
}

/// Parameters of the two-type day: `k` mutants at rate `r + rho` in a
/// population of `n` with wild-type rate `r` and capacity factor `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTypeParams {
    pub n: u64,
    pub gamma: f64,
    pub r: f64,
    pub rho: f64,
}

impl TwoTypeParams {
    pub fn new(n: u64, gamma: f64, r: f64, rho: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("population size must be positive"));
        }
        if !(gamma > 1.0) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(r > 0.0) {
            return Err(Error::invalid(format!("r must be positive, got {r}")));
        }
        if !(rho >= 0.0) {
            return Err(Error::invalid(format!("rho must be nonnegative, got {rho}")));
        }
        Ok(Self { n, gamma, r, rho })
    }

    pub fn sigma_k(&self, k: u64) -> Result<f64> {
        sigma_k(self.n, k, self.r, self.rho, self.gamma)
    }
}

/// End-of-day draw of the two-type population: mutant and wild-type sizes
/// at `sigma_k`, plus the day length used.
pub fn two_type_day_draw<R: Rng + ?Sized>(
    k: u64,
    params: &TwoTypeParams,
    rng: &mut R,
) -> Result<(u64, u64, f64)> {
    if k > params.n {
        return Err(Error::invalid(format!("k = {k} exceeds n = {}", params.n)));
    }
    let sigma = params.sigma_k(k)?;
    let m_end = shifted_negative_binomial(k, (-(params.r + params.rho) * sigma).exp(), rng);
    let z_end = shifted_negative_binomial(params.n - k, (-params.r * sigma).exp(), rng);
    Ok((m_end, z_end, sigma))
}

/// Allocation-free mutant count after one two-type day; the workhorse of
/// long sweep simulations.
pub fn two_type_count_step<R: Rng + ?Sized>(
    k: u64,
    params: &TwoTypeParams,
    rng: &mut R,
) -> Result<u64> {
    if k == 0 || k == params.n {
        return Ok(k);
    }
    let (m_end, z_end, _) = two_type_day_draw(k, params, rng)?;
    Ok(sample_hypergeometric(m_end + z_end, m_end, params.n, rng))
}

/// One two-type day: grow both classes to `sigma_k`, then sample `n`
/// founders hypergeometrically. States 0 and `n` are absorbing.
pub fn day_transition_two_type<R: Rng + ?Sized>(
    k: u64,
    params: &TwoTypeParams,
    rng: &mut R,
) -> Result<(u64, DayOutcome)> {
    let (m_end, z_end, sigma) = two_type_day_draw(k, params, rng)?;
    let k_next = sample_hypergeometric(m_end + z_end, m_end, params.n, rng);
    let post = two_type_state(k_next, params.n, params.r, params.rho)?;
    Ok((
        k_next,
        DayOutcome { end_sizes: vec![m_end, z_end], day_length: sigma, post_sample: post },
    ))
}

fn two_type_state(k: u64, n: u64, r: f64, rho: f64) -> Result<PopulationState> {
    let mut classes = Vec::new();
    if k > 0 {
        classes.push(RateClass { rate: r + rho, count: k, lineage: 1 });
    }
    if k < n {
        classes.push(RateClass { rate: r, count: n - k, lineage: 0 });
    }
    PopulationState::new(classes, n)
}

/// Expected number of mutants at the start of the next day given `k` today:
/// `(k / gamma) e^{(r + rho) sigma_k}`. Equals `k` exactly when `rho = 0`.
pub fn expected_next_mutants(k: u64, params: &TwoTypeParams) -> Result<f64> {
    if k > params.n {
        return Err(Error::invalid(format!("k = {k} exceeds n = {}", params.n)));
    }
    Ok(k as f64 / params.gamma * growth_factor(k, params.n, params.r, params.rho, params.gamma)?)
}

/// One day for an arbitrary number of rate classes. The day length solves
/// `sum_c count_c e^{rate_c sigma} = gamma n`; dilution is a multivariate
/// hypergeometric sample over the end-of-day sizes. Classes diluted to zero
/// are dropped.
pub fn day_transition_multitype<R: Rng + ?Sized>(
    state: &PopulationState,
    gamma: f64,
    rng: &mut R,
) -> Result<DayOutcome> {
    let spec: Vec<(f64, u64)> = state.classes.iter().map(|c| (c.rate, c.count)).collect();
    let sigma = solve_day_length(&spec, gamma)?;
    let end_sizes: Vec<u64> = state
        .classes
        .iter()
        .map(|c| shifted_negative_binomial(c.count, (-c.rate * sigma).exp(), rng))
        .collect();
    let mut remaining_total: u64 = end_sizes.iter().sum();
    let mut remaining_draws = state.n;
    let mut classes = Vec::with_capacity(state.classes.len());
    for (class, &size) in state.classes.iter().zip(&end_sizes) {
        let taken = if remaining_draws == 0 {
            0
        } else if remaining_total == size {
            remaining_draws
        } else {
            sample_hypergeometric(remaining_total, size, remaining_draws, rng)
        };
        remaining_total -= size;
        remaining_draws -= taken;
        if taken > 0 {
            classes.push(RateClass { count: taken, ..*class });
        }
    }
    let post = PopulationState::new(classes, state.n)?;
    Ok(DayOutcome { end_sizes, day_length: sigma, post_sample: post })
}

/// Sequential acceptance of the first class listed: given `m_end` class
/// members among `total_end` individuals at the end of a day, accept member
/// j with probability `(n - accepted so far) / (total_end - (j-1))`. The
/// count of accepted members is hypergeometric; this form exposes the
/// uniform variables driving the dilution.
pub fn sequential_sample_first_class<R: Rng + ?Sized>(
    m_end: u64,
    total_end: u64,
    n: u64,
    rng: &mut R,
) -> u64 {
    debug_assert!(m_end <= total_end && n <= total_end);
    let mut accepted = 0u64;
    for j in 0..m_end {
        let p = (n - accepted) as f64 / (total_end - j) as f64;
        if rng.random::<f64>() < p {
            accepted += 1;
        }
    }
    accepted
}

/// The two-type day in sequential-sampling form; equal in distribution to
/// [`day_transition_two_type`].
pub fn sequential_sampling_transition<R: Rng + ?Sized>(
    k: u64,
    params: &TwoTypeParams,
    rng: &mut R,
) -> Result<u64> {
    if k > params.n {
        return Err(Error::invalid(format!("k = {k} exceeds n = {}", params.n)));
    }
    if k == 0 || k == params.n {
        return Ok(k);
    }
    let sigma = params.sigma_k(k)?;
    let m_end = shifted_negative_binomial(k, (-(params.r + params.rho) * sigma).exp(), rng);
    let z_end = shifted_negative_binomial(params.n - k, (-params.r * sigma).exp(), rng);
    Ok(sequential_sample_first_class(m_end, m_end + z_end, params.n, rng))
}

/// Per-founder cap of the coupled triple chain; the shared Yule forest is
/// simulated with explicit birth times, which is only meant for stage-1
/// diagnostics at modest founder counts.
pub const TRIPLE_FOUNDER_CAP: u64 = 10_000;

/// Counts of the coupled lower/true/upper chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledTripleState {
    pub k_lower: u64,
    pub k_mid: u64,
    pub k_upper: u64,
}

impl CoupledTripleState {
    pub fn new(k_lower: u64, k_mid: u64, k_upper: u64) -> Result<Self> {
        if k_lower > k_upper {
            return Err(Error::invalid("coupled triple requires k_lower <= k_upper"));
        }
        Ok(Self { k_lower, k_mid, k_upper })
    }

    pub fn uniform(k: u64) -> Self {
        Self { k_lower: k, k_mid: k, k_upper: k }
    }

    pub fn all_zero(&self) -> bool {
        self.k_lower == 0 && self.k_mid == 0 && self.k_upper == 0
    }
}

/// Static data of the triple chain: the two-type day parameters plus the
/// coupling band exponent `alpha` in (b, 1/2) and the stage-1 level
/// `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleParams {
    pub day: TwoTypeParams,
    pub alpha: f64,
    pub epsilon: f64,
}

impl TripleParams {
    pub fn new(day: TwoTypeParams, alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::invalid("alpha must lie in (0, 1/2)"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon must lie in (0, 1)"));
        }
        let band = (day.n as f64).powf(-alpha);
        if 1.0 / day.gamma + band >= 1.0 || 1.0 / day.gamma - band <= 0.0 {
            return Err(Error::invalid(
                "thinning band 1/gamma +- n^-alpha must stay inside (0, 1)",
            ));
        }
        Ok(Self { day, alpha, epsilon })
    }
}

/// Result of one joint step of the triple chain.
#[derive(Debug, Clone, Copy)]
pub struct TripleStep {
    pub state: CoupledTripleState,
    /// Whether `k_lower' <= k_mid' <= k_upper'` held; only reported while
    /// the middle chain is at or below `epsilon * n`.
    pub domination_held: Option<bool>,
}

/// One individual of the shared forest: which tree it belongs to and when
/// it was born.
struct ForestMember {
    tree: u64,
    birth: f64,
}

/// Grows one Yule tree at `rate` to `t_end`, pushing (tree, birth time) for
/// every member; the founder is born at time zero.
fn grow_tree<R: Rng + ?Sized>(
    tree: u64,
    rate: f64,
    t_end: f64,
    out: &mut Vec<ForestMember>,
    rng: &mut R,
) {
    out.push(ForestMember { tree, birth: 0.0 });
    let mut size = 1u64;
    let mut t = 0.0f64;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / (rate * size as f64);
        if t >= t_end {
            return;
        }
        out.push(ForestMember { tree, birth: t });
        size += 1;
    }
}

/// One joint step of the coupled triple chain.
///
/// A shared Yule forest of `k_upper` trees grows at rate `r + rho` to the
/// full day length `sigma_0`. The lower chain counts members of the first
/// `k_lower` trees born before `sigma_{ceil(eps n)}` and thinned at
/// `1/gamma - n^{-alpha}`; the middle chain counts members of the first
/// `k_mid` trees born before `sigma_{k_mid}` and accepted by the recursive
/// dilution rule; the upper chain counts members of all `k_upper` trees
/// born before `sigma_0` thinned at `1/gamma + n^{-alpha}`. One uniform per
/// member drives all three thinnings, so `k_lower' <= k_upper'` holds by
/// construction.
pub fn coupled_triple_step<R: Rng + ?Sized>(
    state: &CoupledTripleState,
    params: &TripleParams,
    rng: &mut R,
) -> Result<TripleStep> {
    let founders = state.k_upper.max(state.k_mid).max(state.k_lower);
    if founders > TRIPLE_FOUNDER_CAP {
        return Err(Error::TripleCapExceeded { cap: TRIPLE_FOUNDER_CAP, got: founders });
    }
    if founders == 0 {
        return Ok(TripleStep {
            state: CoupledTripleState::uniform(0),
            domination_held: Some(true),
        });
    }
    let day = &params.day;
    let n = day.n;
    let band = (n as f64).powf(-params.alpha);
    let sigma0 = day.sigma_k(0)?;
    let k_eps = (params.epsilon * n as f64).ceil() as u64;
    let sigma_eps = day.sigma_k(k_eps.min(n))?;
    let sigma_mid = day.sigma_k(state.k_mid.min(n))?;

    let mut forest: Vec<ForestMember> = Vec::with_capacity(founders as usize * 2);
    for tree in 0..founders {
        grow_tree(tree, day.r + day.rho, sigma0, &mut forest, rng);
    }
    // Members of the middle chain's day-end population come first so that
    // the recursive acceptance rule sees them in order j = 1..m_end.
    forest.sort_by(|a, b| {
        let a_mid = a.tree < state.k_mid && a.birth < sigma_mid;
        let b_mid = b.tree < state.k_mid && b.birth < sigma_mid;
        b_mid
            .cmp(&a_mid)
            .then(a.tree.cmp(&b.tree))
            .then(a.birth.partial_cmp(&b.birth).unwrap())
    });
    let m_end = forest
        .iter()
        .take_while(|m| m.tree < state.k_mid && m.birth < sigma_mid)
        .count() as u64;
    let z_end = if state.k_mid > n {
        0
    } else {
        shifted_negative_binomial(n - state.k_mid.min(n), (-day.r * sigma_mid).exp(), rng)
    };
    let total_end = m_end + z_end;

    let mut accepted = 0u64;
    let mut k_lower_next = 0u64;
    let mut k_mid_next = 0u64;
    let mut k_upper_next = 0u64;
    for (j, member) in forest.iter().enumerate() {
        let u: f64 = rng.random();
        if member.tree < state.k_lower && member.birth < sigma_eps && u < 1.0 / day.gamma - band {
            k_lower_next += 1;
        }
        if (j as u64) < m_end {
            // total_end >= n is not guaranteed pathwise when k_mid is large,
            // but for the stage-1 diagnostic m + z >= n always holds because
            // every founder contributes at least one member.
            let p = (n - accepted) as f64 / (total_end - j as u64) as f64;
            if u < p {
                accepted += 1;
                k_mid_next += 1;
            }
        }
        if u < 1.0 / day.gamma + band {
            k_upper_next += 1;
        }
    }
    let monitored = state.k_mid <= (params.epsilon * n as f64) as u64;
    Ok(TripleStep {
        state: CoupledTripleState { k_lower: k_lower_next, k_mid: k_mid_next, k_upper: k_upper_next },
        domination_held: monitored
            .then_some(k_lower_next <= k_mid_next && k_mid_next <= k_upper_next),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn absorbing_boundaries() {
        let params = TwoTypeParams::new(100, 2.0, 1.0, 0.1).unwrap();
        let mut r = rng(21);
        for _ in 0..50 {
            let (k0, _) = day_transition_two_type(0, &params, &mut r).unwrap();
            assert_eq!(k0, 0);
            let (kn, _) = day_transition_two_type(100, &params, &mut r).unwrap();
            assert_eq!(kn, 100);
        }
    }

    #[test]
    fn end_of_day_total_never_shrinks_and_averages_gamma_n() {
        let params = TwoTypeParams::new(500, 3.0, 1.0, 0.05).unwrap();
        let mut r = rng(22);
        let mut totals = Vec::new();
        for _ in 0..20_000 {
            let (_, out) = day_transition_two_type(100, &params, &mut r).unwrap();
            let total: u64 = out.end_sizes.iter().sum();
            assert!(total >= 500);
            assert_eq!(
                out.post_sample.classes().iter().map(|c| c.count).sum::<u64>(),
                500
            );
            totals.push(total as f64);
        }
        let (m, se) = stats::mean_and_se(&totals);
        assert!((m - 1500.0).abs() < 3.0 * se, "mean end-of-day total {m}");
    }

    #[test]
    fn neutral_day_is_a_martingale() {
        let params = TwoTypeParams::new(1000, 2.0, 1.0, 0.0).unwrap();
        let mut r = rng(23);
        let k0 = 300u64;
        let draws: Vec<f64> = (0..200_000)
            .map(|_| day_transition_two_type(k0, &params, &mut r).unwrap().0 as f64)
            .collect();
        let (m, se) = stats::mean_and_se(&draws);
        assert!((m - k0 as f64).abs() < 4.0 * se, "neutral mean {m}");
    }

    #[test]
    fn selective_advantage_of_a_single_mutant() {
        // E[K_1 | K_0 = 1] - 1 ~ rho ln(gamma) / r; downscaled version of
        // the acceptance run.
        let params = TwoTypeParams::new(10_000, 10.0, 1.0, 0.05).unwrap();
        let mut r = rng(24);
        let n = 200_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| day_transition_two_type(1, &params, &mut r).unwrap().0 as f64)
            .collect();
        let (m, se) = stats::mean_and_se(&draws);
        let target = 0.05 * 10.0f64.ln();
        assert!(
            ((m - 1.0) - target).abs() < 0.1 * target + 3.0 * se,
            "excess {} vs {target}",
            m - 1.0
        );
    }

    #[test]
    fn expected_next_mutants_identities() {
        let params = TwoTypeParams::new(1000, 2.0, 1.0, 0.0).unwrap();
        for k in [0u64, 1, 250, 999, 1000] {
            assert!((expected_next_mutants(k, &params).unwrap() - k as f64).abs() < 1e-9);
        }
        let sel = TwoTypeParams::new(1000, 2.0, 1.0, 0.2).unwrap();
        assert!((expected_next_mutants(1000, &sel).unwrap() - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn expected_next_mutants_expansion() {
        // k = 0.3 n: E = k (1 + 0.7 rho ln(gamma)/r) + O(rho^2) terms.
        let params = TwoTypeParams::new(1_000_000, 2.0, 1.0, 1e-3).unwrap();
        let k = 300_000u64;
        let e = expected_next_mutants(k, &params).unwrap();
        let expansion = k as f64 * (1.0 + 0.7 * 1e-3 * 2.0f64.ln());
        assert!(
            (e - expansion).abs() / expansion < 5e-6,
            "E {e} vs expansion {expansion}"
        );
    }

    #[test]
    fn multitype_single_class_keeps_n() {
        let state = PopulationState::homogeneous(400, 1.3).unwrap();
        let mut r = rng(25);
        for _ in 0..200 {
            let out = day_transition_multitype(&state, 2.0, &mut r).unwrap();
            assert_eq!(out.post_sample.n_classes(), 1);
            assert_eq!(out.post_sample.classes()[0].count, 400);
            assert!((out.day_length - 2.0f64.ln() / 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn multitype_two_class_marginal_matches_two_type() {
        let n = 1000u64;
        let (gamma, r, rho) = (2.0, 1.0, 0.1);
        let params = TwoTypeParams::new(n, gamma, r, rho).unwrap();
        let k0 = 50u64;
        let state = PopulationState::new(
            vec![
                RateClass { rate: r + rho, count: k0, lineage: 1 },
                RateClass { rate: r, count: n - k0, lineage: 0 },
            ],
            n,
        )
        .unwrap();
        let mut rng1 = rng(26);
        let mut rng2 = rng(27);
        let reps = 60_000;
        let multi: Vec<f64> = (0..reps)
            .map(|_| {
                let out = day_transition_multitype(&state, gamma, &mut rng1).unwrap();
                out.post_sample.count_of_lineage(1) as f64
            })
            .collect();
        let direct: Vec<f64> = (0..reps)
            .map(|_| day_transition_two_type(k0, &params, &mut rng2).unwrap().0 as f64)
            .collect();
        let ks = stats::ks_two_sample(&multi, &direct);
        assert!(ks.passes_at(0.01), "KS p = {}", ks.p_value);
    }

    #[test]
    fn multitype_neutral_split_is_martingale() {
        let n = 1000u64;
        let k0 = 360u64;
        let state = PopulationState::new(
            vec![
                RateClass { rate: 1.0, count: k0, lineage: 1 },
                RateClass { rate: 1.0, count: n - k0, lineage: 0 },
            ],
            n,
        )
        .unwrap();
        let mut r = rng(28);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                day_transition_multitype(&state, 2.0, &mut r)
                    .unwrap()
                    .post_sample
                    .count_of_lineage(1) as f64
            })
            .collect();
        let (m, se) = stats::mean_and_se(&draws);
        assert!((m - k0 as f64).abs() < 3.0 * se, "mean {m}");
    }

    #[test]
    fn sequential_sampling_accepts_everything_without_growth() {
        // total_end == n means every acceptance probability is one.
        let mut r = rng(29);
        for m in [0u64, 5, 50] {
            assert_eq!(sequential_sample_first_class(m, 100, 100, &mut r), m);
        }
    }

    #[test]
    fn sequential_equals_hypergeometric_in_distribution() {
        let params = TwoTypeParams::new(1000, 2.0, 1.0, 0.1).unwrap();
        let mut rng1 = rng(30);
        let mut rng2 = rng(31);
        let reps = 60_000;
        let seq: Vec<f64> = (0..reps)
            .map(|_| sequential_sampling_transition(1, &params, &mut rng1).unwrap() as f64)
            .collect();
        let hyp: Vec<f64> = (0..reps)
            .map(|_| day_transition_two_type(1, &params, &mut rng2).unwrap().0 as f64)
            .collect();
        let ks = stats::ks_two_sample(&seq, &hyp);
        assert!(ks.passes_at(0.01), "KS p = {}", ks.p_value);
    }

    #[test]
    fn sequential_neutral_single_mutant_mean_one() {
        let params = TwoTypeParams::new(1000, 2.0, 1.0, 0.0).unwrap();
        let mut r = rng(32);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sequential_sampling_transition(1, &params, &mut r).unwrap() as f64)
            .collect();
        let (m, se) = stats::mean_and_se(&draws);
        assert!((m - 1.0).abs() < 4.0 * se, "mean {m}");
    }

    #[test]
    fn triple_all_zero_is_absorbing() {
        let params = TripleParams::new(
            TwoTypeParams::new(10_000, 2.0, 1.0, 10_000f64.powf(-0.3)).unwrap(),
            0.4,
            0.05,
        )
        .unwrap();
        let mut r = rng(33);
        let step =
            coupled_triple_step(&CoupledTripleState::uniform(0), &params, &mut r).unwrap();
        assert!(step.state.all_zero());
    }

    #[test]
    fn triple_lower_never_exceeds_upper() {
        let params = TripleParams::new(
            TwoTypeParams::new(2_000, 2.0, 1.0, 2_000f64.powf(-0.3)).unwrap(),
            0.4,
            0.05,
        )
        .unwrap();
        let mut r = rng(34);
        for _ in 0..2_000 {
            let mut state = CoupledTripleState::uniform(1);
            for _ in 0..40 {
                if state.all_zero() {
                    break;
                }
                // runs whose upper chain outgrows the diagnostic cap just end
                let Ok(step) = coupled_triple_step(&state, &params, &mut r) else {
                    break;
                };
                state = step.state;
                assert!(state.k_lower <= state.k_upper);
            }
        }
    }

    #[test]
    fn triple_domination_violations_are_rare() {
        // Fraction of monitored steps violating the sandwich before the
        // middle chain reaches eps n, over many runs.
        let n = 10_000u64;
        let params = TripleParams::new(
            TwoTypeParams::new(n, 2.0, 1.0, (n as f64).powf(-0.3)).unwrap(),
            0.4,
            0.05,
        )
        .unwrap();
        let eps_n = (0.05 * n as f64) as u64;
        let mut r = rng(35);
        let mut steps = 0u64;
        let mut violations = 0u64;
        for _ in 0..10_000 {
            let mut state = CoupledTripleState::uniform(1);
            while state.k_mid > 0 && state.k_mid < eps_n {
                let Ok(step) = coupled_triple_step(&state, &params, &mut r) else {
                    break; // upper chain hit the founder cap; run ends here
                };
                if let Some(held) = step.domination_held {
                    steps += 1;
                    if !held {
                        violations += 1;
                    }
                }
                state = step.state;
            }
        }
        let rate = violations as f64 / steps as f64;
        assert!(rate <= 1e-2, "violation rate {rate} over {steps} steps");
    }

    #[test]
    fn triple_upper_marginal_is_the_gw_law() {
        // One step of the upper coordinate from a single founder matches the
        // mixed binomial(geometric(e^{-(r+rho) sigma_0}), 1/gamma + n^-alpha).
        let n = 10_000u64;
        let rho = (n as f64).powf(-0.3);
        let day = TwoTypeParams::new(n, 2.0, 1.0, rho).unwrap();
        let params = TripleParams::new(day, 0.4, 0.05).unwrap();
        let law = crate::gw::OffspringLaw::mutant_upper(n, 2.0, 1.0, rho, 0.4).unwrap();
        let mut rng1 = rng(36);
        let mut rng2 = rng(37);
        let reps = 30_000;
        let triple: Vec<f64> = (0..reps)
            .map(|_| {
                coupled_triple_step(&CoupledTripleState::uniform(1), &params, &mut rng1)
                    .unwrap()
                    .state
                    .k_upper as f64
            })
            .collect();
        let gw: Vec<f64> = (0..reps).map(|_| law.sample(&mut rng2) as f64).collect();
        let ks = stats::ks_two_sample(&triple, &gw);
        assert!(ks.passes_at(0.01), "KS p = {}", ks.p_value);
    }

    #[test]
    fn triple_founder_cap_is_enforced() {
        let params = TripleParams::new(
            TwoTypeParams::new(100_000, 2.0, 1.0, 0.01).unwrap(),
            0.4,
            0.05,
        )
        .unwrap();
        let mut r = rng(38);
        let state = CoupledTripleState::uniform(TRIPLE_FOUNDER_CAP + 1);
        assert!(matches!(
            coupled_triple_step(&state, &params, &mut r),
            Err(Error::TripleCapExceeded { .. })
        ));
    }

    #[test]
    fn population_state_validation() {
        assert!(PopulationState::new(
            vec![RateClass { rate: 1.0, count: 5, lineage: 0 }],
            6
        )
        .is_err());
        assert!(PopulationState::new(
            vec![
                RateClass { rate: 1.0, count: 3, lineage: 0 },
                RateClass { rate: 1.1, count: 3, lineage: 0 },
            ],
            6
        )
        .is_err());
        assert!(PopulationState::new(
            vec![RateClass { rate: 0.0, count: 6, lineage: 0 }],
            6
        )
        .is_err());
    }
}
