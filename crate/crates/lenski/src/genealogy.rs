//! Neutral genealogy statistics: one-generation offspring vectors, pair and
//! triple coalescence probabilities, and the ancestral partition chain whose
//! rescaled pair-coalescence times are asymptotically exponential (the
//! Kingman limit).
//!
//! One neutral day turns `n` founders into `n` iid geometric families
//! (parameter `1/gamma` under the expectation rule, the growth rate
//! cancels), from which the next day's `n` founders are drawn uniformly
//! without replacement. The pair coalescence probability per day is
//! `c_n ~ 2 (1 - 1/gamma) / n`, the triple probability is `O(n^{-2})`.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::replicate_rng;
use crate::sampling::sample_hypergeometric;
use crate::stats;
use crate::yule::StoppingRule;

/// One generation's offspring counts per parent; exchangeable and summing
/// to the population size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffspringVector(pub Vec<u64>);

impl OffspringVector {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// End-of-day family sizes of `n` founders. Under the expectation rule the
/// sizes are iid geometric with parameter `1/gamma` on {1, 2, ...}; under
/// the hitting rule growth stops when the total reaches `ceil(gamma n)`,
/// realized as a size-biased urn over founders (equal rates cancel from the
/// jump chain).
pub fn sample_family_sizes<R: Rng + ?Sized>(
    n: u64,
    gamma: f64,
    rule: StoppingRule,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::invalid("need at least one founder"));
    }
    if !(gamma > 1.0) {
        return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
    }
    match rule {
        StoppingRule::Expectation => {
            let geo = Geometric::new(1.0 / gamma).expect("1/gamma in (0,1)");
            Ok((0..n).map(|_| 1 + geo.sample(rng)).collect())
        }
        StoppingRule::Hitting => {
            let target = (gamma * n as f64).ceil() as u64;
            let mut owner: Vec<u32> = (0..n as u32).collect();
            owner.reserve((target - n) as usize);
            let mut sizes = vec![1u64; n as usize];
            for total in n..target {
                let j = rng.random_range(0..total) as usize;
                let fam = owner[j];
                owner.push(fam);
                sizes[fam as usize] += 1;
            }
            Ok(sizes)
        }
    }
}

/// Draws one generation's offspring vector: family sizes, then a uniform
/// `n`-sample without replacement assigning the sampled slots to families.
pub fn sample_offspring_vector<R: Rng + ?Sized>(
    n: u64,
    gamma: f64,
    rule: StoppingRule,
    rng: &mut R,
) -> Result<OffspringVector> {
    let families = sample_family_sizes(n, gamma, rule, rng)?;
    let mut remaining_total: u64 = families.iter().sum();
    let mut remaining_draws = n;
    let mut nu = Vec::with_capacity(families.len());
    for &size in &families {
        let taken = if remaining_draws == 0 {
            0
        } else if remaining_total == size {
            remaining_draws
        } else {
            sample_hypergeometric(remaining_total, size, remaining_draws, rng)
        };
        remaining_total -= size;
        remaining_draws -= taken;
        nu.push(taken);
    }
    Ok(OffspringVector(nu))
}

/// Monte Carlo coalescence estimate with its 95% CI and asymptotic target.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoalescenceEstimate {
    pub value: f64,
    pub ci_halfwidth: f64,
    pub replicates: u64,
    pub asymptotic: f64,
}

/// Estimates the pair and triple coalescence probabilities in one pass:
/// `E[sum_i C(Y_i,2) / C(Z,2)]` and `E[sum_i C(Y_i,3) / C(Z,3)]` over the
/// raw family sizes `Y_i` with total `Z`.
pub fn estimate_coalescence_probabilities(
    n: u64,
    gamma: f64,
    replicates: u64,
    master_seed: u64,
    rule: StoppingRule,
) -> Result<(CoalescenceEstimate, CoalescenceEstimate)> {
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let stats_vec: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(master_seed, i);
            let fam = sample_family_sizes(n, gamma, rule, &mut rng).expect("validated");
            let z: u64 = fam.iter().sum();
            let zf = z as f64;
            let pair_den = zf * (zf - 1.0) / 2.0;
            let triple_den = zf * (zf - 1.0) * (zf - 2.0) / 6.0;
            let mut pair = 0.0;
            let mut triple = 0.0;
            for &y in &fam {
                let yf = y as f64;
                pair += yf * (yf - 1.0) / 2.0;
                triple += yf * (yf - 1.0) * (yf - 2.0) / 6.0;
            }
            (pair / pair_den, triple / triple_den)
        })
        .collect();
    let pairs: Vec<f64> = stats_vec.iter().map(|s| s.0).collect();
    let triples: Vec<f64> = stats_vec.iter().map(|s| s.1).collect();
    let (pm, pse) = stats::mean_and_se(&pairs);
    let (tm, tse) = stats::mean_and_se(&triples);
    Ok((
        CoalescenceEstimate {
            value: pm,
            ci_halfwidth: 1.96 * pse,
            replicates,
            asymptotic: 2.0 * (1.0 - 1.0 / gamma) / n as f64,
        },
        CoalescenceEstimate {
            value: tm,
            ci_halfwidth: 1.96 * tse,
            replicates,
            asymptotic: f64::NAN, // O(n^-2) without a pinned constant
        },
    ))
}

pub fn estimate_pair_coalescence(
    n: u64,
    gamma: f64,
    replicates: u64,
    master_seed: u64,
) -> Result<CoalescenceEstimate> {
    Ok(estimate_coalescence_probabilities(n, gamma, replicates, master_seed, StoppingRule::Expectation)?.0)
}

pub fn estimate_triple_coalescence(
    n: u64,
    gamma: f64,
    replicates: u64,
    master_seed: u64,
) -> Result<CoalescenceEstimate> {
    Ok(estimate_coalescence_probabilities(n, gamma, replicates, master_seed, StoppingRule::Expectation)?.1)
}

/// Partition of `{0, .., n-1}` into blocks, kept in canonical order (blocks
/// sorted by smallest element).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Self { blocks: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// True when every block of `finer` is contained in one of ours.
    pub fn coarsens(&self, finer: &Partition) -> bool {
        finer.blocks.iter().all(|fb| {
            self.blocks
                .iter()
                .any(|cb| fb.iter().all(|e| cb.contains(e)))
        })
    }

    fn merge_by_parent(&self, parents: &[usize]) -> Partition {
        debug_assert_eq!(parents.len(), self.blocks.len());
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (block, &p) in self.blocks.iter().zip(parents) {
            match groups.iter_mut().find(|(gp, _)| *gp == p) {
                Some((_, members)) => members.extend_from_slice(block),
                None => groups.push((p, block.clone())),
            }
        }
        let mut blocks: Vec<Vec<usize>> = groups
            .into_iter()
            .map(|(_, mut members)| {
                members.sort_unstable();
                members
            })
            .collect();
        blocks.sort_by_key(|b| b[0]);
        Partition { blocks }
    }
}

/// Assigns `m` current-generation lineages to parents: the lineages occupy
/// `m` distinct uniform slots among the `z` end-of-day individuals, and a
/// slot belongs to the family given by the size prefix sums. Subsampling a
/// uniform n-sample is again uniform, so drawing the slots directly from
/// the pooled families realizes the dilution composed with the lineage
/// choice.
fn assign_parents<R: Rng + ?Sized>(m: usize, families: &[u64], rng: &mut R) -> Vec<usize> {
    let z: u64 = families.iter().sum();
    debug_assert!(m as u64 <= z);
    let mut slots: Vec<u64> = Vec::with_capacity(m);
    while slots.len() < m {
        let s = rng.random_range(0..z);
        if !slots.contains(&s) {
            slots.push(s);
        }
    }
    let mut cumulative: Vec<u64> = Vec::with_capacity(families.len());
    let mut acc = 0u64;
    for &f in families {
        acc += f;
        cumulative.push(acc);
    }
    slots
        .iter()
        .map(|&s| cumulative.partition_point(|&c| c <= s))
        .collect()
}

/// Runs the ancestral chain of an `n_sample` out of `n_pop`: one offspring
/// vector per generation backwards, each lineage mapped to a parent slot.
/// Returns the partitions per generation, starting from singletons, ending
/// when a single block remains or `max_generations` passed.
pub fn ancestral_chain<R: Rng + ?Sized>(
    n_pop: u64,
    n_sample: usize,
    max_generations: u64,
    gamma: f64,
    rng: &mut R,
) -> Result<Vec<Partition>> {
    if n_sample == 0 || n_sample as u64 > n_pop {
        return Err(Error::invalid("need 1 <= n_sample <= n_pop"));
    }
    let mut chain = vec![Partition::singletons(n_sample)];
    for _ in 0..max_generations {
        let current = chain.last().unwrap();
        if current.n_blocks() <= 1 {
            break;
        }
        let families = sample_family_sizes(n_pop, gamma, StoppingRule::Expectation, rng)?;
        let parents = assign_parents(current.n_blocks(), &families, rng);
        chain.push(current.merge_by_parent(&parents));
    }
    Ok(chain)
}

/// Generation at which a pair of lineages coalesces; `None` if it has not
/// within `max_generations`.
pub fn pair_coalescence_generation<R: Rng + ?Sized>(
    n_pop: u64,
    gamma: f64,
    max_generations: u64,
    rng: &mut R,
) -> Result<Option<u64>> {
    for g in 1..=max_generations {
        let families = sample_family_sizes(n_pop, gamma, StoppingRule::Expectation, rng)?;
        let parents = assign_parents(2, &families, rng);
        if parents[0] == parents[1] {
            return Ok(Some(g));
        }
    }
    Ok(None)
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
    fn offspring_vector_sums_to_n() {
        let mut r = rng(61);
        for rule in [StoppingRule::Expectation, StoppingRule::Hitting] {
            for _ in 0..50 {
                let nu = sample_offspring_vector(200, 4.0, rule, &mut r).unwrap();
                assert_eq!(nu.total(), 200);
                assert_eq!(nu.0.len(), 200);
            }
        }
    }

    #[test]
    fn offspring_counts_are_exchangeable_with_unit_mean() {
        let mut r = rng(62);
        let reps = 30_000;
        let mut nu1 = Vec::with_capacity(reps);
        let mut nu2 = Vec::with_capacity(reps);
        for _ in 0..reps {
            let nu = sample_offspring_vector(100, 3.0, StoppingRule::Expectation, &mut r).unwrap();
            nu1.push(nu.0[0] as f64);
            nu2.push(nu.0[1] as f64);
        }
        let (m, se) = stats::mean_and_se(&nu1);
        assert!((m - 1.0).abs() < 3.0 * se, "E[nu_1] = {m}");
        let ks = stats::ks_two_sample(&nu1, &nu2);
        assert!(ks.passes_at(0.01), "exchangeability KS p = {}", ks.p_value);
    }

    #[test]
    fn family_size_is_geometric_one_over_gamma() {
        let gamma = 4.0;
        let mut r = rng(63);
        let n = 100_000usize;
        let bins = 20usize;
        let mut counts = vec![0.0f64; bins];
        let geo_p = 1.0 / gamma;
        for _ in 0..(n / 100) {
            let fam = sample_family_sizes(100, gamma, StoppingRule::Expectation, &mut r).unwrap();
            for y in fam {
                let idx = (y as usize).min(bins) - 1;
                counts[idx.min(bins - 1)] += 1.0;
            }
        }
        let mut expected = vec![0.0f64; bins];
        let mut tail = 1.0;
        for (k, e) in expected.iter_mut().enumerate().take(bins - 1) {
            let p = geo_p * (1.0 - geo_p).powi(k as i32);
            *e = n as f64 * p;
            tail -= p;
        }
        expected[bins - 1] = n as f64 * tail;
        let (_s, p) = stats::chi_square_gof(&counts, &expected);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn pair_coalescence_matches_asymptotics() {
        // N = 500, gamma = 10: N c within 5% of 1.8.
        let (pair, triple) =
            estimate_coalescence_probabilities(500, 10.0, 30_000, 64, StoppingRule::Expectation)
                .unwrap();
        let nc = 500.0 * pair.value;
        assert!((nc - 1.8).abs() / 1.8 < 0.05, "N c = {nc}");
        assert!(triple.value / pair.value < 0.05, "d/c = {}", triple.value / pair.value);
    }

    #[test]
    fn pair_coalescence_large_and_small_gamma() {
        let big = estimate_pair_coalescence(500, 1e4, 20_000, 65).unwrap();
        assert!((500.0 * big.value - 2.0).abs() / 2.0 < 0.05, "N c = {}", 500.0 * big.value);
        let small = estimate_pair_coalescence(500, 1.1, 20_000, 66).unwrap();
        let target = 2.0 * (1.0 - 1.0 / 1.1);
        assert!(
            (500.0 * small.value - target).abs() / target < 0.10,
            "N c = {} vs {target}",
            500.0 * small.value
        );
    }

    #[test]
    fn triple_coalescence_scales_as_inverse_square() {
        let mut logs_n = Vec::new();
        let mut logs_d = Vec::new();
        for (i, n) in [250u64, 500, 1000].iter().enumerate() {
            let (c, d) = estimate_coalescence_probabilities(
                *n,
                10.0,
                40_000,
                67 + i as u64,
                StoppingRule::Expectation,
            )
            .unwrap();
            assert!(d.value > 0.0);
            // N c is flat across population sizes
            let nc = *n as f64 * c.value;
            assert!((nc - 1.8).abs() / 1.8 < 0.10, "N c = {nc} at N = {n}");
            logs_n.push((*n as f64).ln());
            logs_d.push(d.value.ln());
        }
        let slope = stats::ols_slope(&logs_n, &logs_d);
        assert!((slope + 2.0).abs() < 0.3, "log-log slope {slope}");
        // d * n^2 bounded: consecutive ratios below 2
        let dn2: Vec<f64> = logs_n
            .iter()
            .zip(&logs_d)
            .map(|(ln_n, ln_d)| (ln_d + 2.0 * ln_n).exp())
            .collect();
        for w in dn2.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio < 2.0 && ratio > 0.5, "d n^2 ratio {ratio}");
        }
    }

    #[test]
    fn triple_positive_for_gamma_near_one() {
        let d = estimate_triple_coalescence(500, 1.01, 5_000, 68).unwrap();
        assert!(d.value.is_finite() && d.value > 0.0);
    }

    #[test]
    fn chain_of_one_is_constant() {
        let mut r = rng(69);
        let chain = ancestral_chain(100, 1, 50, 3.0, &mut r).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0].n_blocks(), 1);
    }

    #[test]
    fn partitions_coarsen_monotonically() {
        let mut r = rng(70);
        for _ in 0..20 {
            let chain = ancestral_chain(120, 6, 100_000, 2.0, &mut r).unwrap();
            for w in chain.windows(2) {
                assert!(w[1].n_blocks() <= w[0].n_blocks());
                assert!(w[1].coarsens(&w[0]));
            }
            assert_eq!(chain.last().unwrap().n_blocks(), 1);
        }
    }

    #[test]
    fn pair_coalescence_time_mean_matches_one_over_c() {
        let n = 300u64;
        let gamma = 10.0;
        let mut r = rng(71);
        let c_asym = 2.0 * (1.0 - 1.0 / gamma) / n as f64;
        let samples: Vec<f64> = (0..400)
            .map(|_| {
                pair_coalescence_generation(n, gamma, 2_000_000, &mut r)
                    .unwrap()
                    .expect("coalesces") as f64
            })
            .collect();
        let (m, se) = stats::mean_and_se(&samples);
        assert!(
            (m * c_asym - 1.0).abs() < 4.0 * se * c_asym + 0.02,
            "E[G] c = {}",
            m * c_asym
        );
    }

    #[test]
    fn first_merger_of_three_is_binary() {
        let mut r = rng(72);
        let mut triple_mergers = 0;
        let runs = 1_500;
        for _ in 0..runs {
            let chain = ancestral_chain(500, 3, 1_000_000, 10.0, &mut r).unwrap();
            let first_change = chain
                .windows(2)
                .find(|w| w[1].n_blocks() < w[0].n_blocks())
                .expect("some merger");
            if first_change[0].n_blocks() == 3 && first_change[1].n_blocks() == 1 {
                triple_mergers += 1;
            }
        }
        assert!(
            (triple_mergers as f64 / runs as f64) < 0.01,
            "{triple_mergers} triple mergers in {runs}"
        );
    }

    #[test]
    fn backward_assignment_reproduces_pair_coalescence_rate() {
        // Same-parent frequency of two lineages across single generations
        // agrees with the raw family-size estimator.
        let n = 400u64;
        let gamma = 5.0;
        let mut r = rng(73);
        let reps = 40_000;
        let mut same = 0u64;
        for _ in 0..reps {
            let fam = sample_family_sizes(n, gamma, StoppingRule::Expectation, &mut r).unwrap();
            let p = assign_parents(2, &fam, &mut r);
            if p[0] == p[1] {
                same += 1;
            }
        }
        let freq = same as f64 / reps as f64;
        let est = estimate_pair_coalescence(n, gamma, 40_000, 74).unwrap();
        let se_freq = (freq * (1.0 - freq) / reps as f64).sqrt();
        assert!(
            (freq - est.value).abs() < 3.0 * se_freq + est.ci_halfwidth,
            "same-parent {freq} vs estimator {}",
            est.value
        );
    }
}
