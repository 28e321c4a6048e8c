//! The long-horizon mutation-selection chain: beneficial mutations arrive
//! at rate `mu` per day on a uniformly chosen individual and add
//! `psi(F) * rho` to its reproduction rate (`psi(x) = x^{-q}`; `q = 0` is
//! the additive base model). Days between mutation events leave a
//! homogeneous population unchanged after dilution, so those stretches are
//! skipped in O(1) by drawing the geometric gap to the next arrival; only
//! days with standing variation are simulated class by class.
//!
//! Each mutation founds a lineage tracked to fixation (all `n` individuals
//! carry it) or loss, which is what the successful-mutation counting
//! process and the relative-fitness process are built from.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::cannings::{day_transition_multitype, PopulationState, RateClass};
use crate::error::{Error, Result};

/// A scaling specified either as a power of the population size or as an
/// explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Scaling {
    /// `value = n^{-exponent}`.
    Exponent(f64),
    Explicit(f64),
}

impl Scaling {
    fn resolve(&self, n: u64) -> f64 {
        match self {
            Scaling::Exponent(e) => (n as f64).powf(-e),
            Scaling::Explicit(v) => *v,
        }
    }
}

/// Full parameter set of the evolution experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: u64,
    pub gamma: f64,
    pub r0: f64,
    /// Rate increment per beneficial mutation (`rho`).
    pub selection: Scaling,
    /// Per-day mutation probability (`mu`).
    pub mutation: Scaling,
    /// Epistasis exponent `q > -1`; a fixation at relative fitness `x`
    /// adds `x^{-q} rho` instead of `rho`.
    pub q: f64,
    /// Common growth time of the fitness measurement; defaults to one
    /// ancestral day length `ln(gamma) / r0`.
    pub u: f64,
}

impl ModelParams {
    pub fn new(
        n: u64,
        gamma: f64,
        r0: f64,
        selection: Scaling,
        mutation: Scaling,
        q: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("population size must be positive"));
        }
        if !(gamma > 1.0) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(r0 > 0.0) {
            return Err(Error::invalid(format!("r0 must be positive, got {r0}")));
        }
        if !(q > -1.0) {
            return Err(Error::invalid(format!("epistasis exponent must exceed -1, got {q}")));
        }
        if let Scaling::Exponent(b) = selection {
            if !(b > 0.0 && b < 0.5) {
                return Err(Error::invalid(format!("selection exponent b must lie in (0, 1/2), got {b}")));
            }
        }
        if let (Scaling::Exponent(b), Scaling::Exponent(a)) = (selection, mutation) {
            if !(a > 3.0 * b) {
                return Err(Error::invalid(format!(
                    "mutation exponent a = {a} must exceed 3b = {}",
                    3.0 * b
                )));
            }
        }
        let rho = selection.resolve(n);
        let mu = mutation.resolve(n);
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("rho must be nonnegative, got {rho}")));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::invalid(format!("mu must lie in [0, 1], got {mu}")));
        }
        Ok(Self { n, gamma, r0, selection, mutation, q, u: gamma.ln() / r0 })
    }

    pub fn with_u(mut self, u: f64) -> Result<Self> {
        if !(u > 0.0) {
            return Err(Error::invalid(format!("u must be positive, got {u}")));
        }
        self.u = u;
        Ok(self)
    }

    pub fn rho(&self) -> f64 {
        self.selection.resolve(self.n)
    }

    pub fn mu(&self) -> f64 {
        self.mutation.resolve(self.n)
    }

    /// `psi(x) = x^{-q}` applied to the fitness at a mutation's arrival.
    pub fn psi(&self, fitness: f64) -> f64 {
        if self.q == 0.0 {
            1.0
        } else {
            fitness.powf(-self.q)
        }
    }
}

/// Relative fitness of a population against the homogeneous ancestor at
/// rate `r0`: `log((1/n) sum_j e^{R_j u}) / (r0 u)`, evaluated with the
/// maximal rate factored out. Homogeneous populations give exactly
/// `rate / r0`.
pub fn relative_fitness(state: &PopulationState, r0: f64, u: f64) -> Result<f64> {
    if !(r0 > 0.0) || !(u > 0.0) {
        return Err(Error::invalid("relative fitness needs r0 > 0 and u > 0"));
    }
    Ok(relative_fitness_classes(
        state.classes().iter().map(|c| (c.rate, c.count)),
        state.n(),
        r0,
        u,
    ))
}

fn relative_fitness_classes<I: Iterator<Item = (f64, u64)>>(
    classes: I,
    n: u64,
    r0: f64,
    u: f64,
) -> f64 {
    let items: Vec<(f64, u64)> = classes.collect();
    let max_rate = items.iter().fold(f64::NEG_INFINITY, |a, (r, _)| a.max(*r));
    let mut sum = 0.0;
    for (rate, count) in &items {
        sum += *count as f64 / n as f64 * ((rate - max_rate) * u).exp();
    }
    (max_rate * u + sum.ln()) / (r0 * u)
}

/// How a lineage ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LineageOutcome {
    Fixed,
    Lost,
    /// Still segregating when the run ended.
    Censored,
}

/// A beneficial mutation arrival.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MutationEvent {
    pub day: u64,
    pub lineage: u64,
    pub parent_lineage: u64,
    pub parent_rate: f64,
    pub new_rate: f64,
    pub fitness_at_arrival: f64,
    /// Population was not homogeneous in rate when this mutation arrived.
    pub interfering: bool,
}

/// Resolution of a lineage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolutionEvent {
    pub lineage: u64,
    pub day: u64,
    pub outcome: LineageOutcome,
}

/// One sampled row of the trajectory; `successful_mutations` is the count
/// of eventually fixed mutations that have arrived by this day.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRecord {
    pub day: u64,
    pub fitness: f64,
    pub successful_mutations: u64,
    pub n_classes: usize,
    pub interference: bool,
}

/// Output of one replicate.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub mutations: Vec<MutationEvent>,
    pub resolutions: Vec<ResolutionEvent>,
    pub horizon: u64,
    pub final_state: PopulationState,
}

impl Trajectory {
    pub fn resolution_of(&self, lineage: u64) -> Option<&ResolutionEvent> {
        self.resolutions.iter().find(|r| r.lineage == lineage)
    }

    /// Arrival days of the eventually fixed mutations, ascending.
    pub fn success_arrival_days(&self) -> Vec<u64> {
        let mut days: Vec<u64> = self
            .mutations
            .iter()
            .filter(|m| {
                matches!(
                    self.resolution_of(m.lineage),
                    Some(ResolutionEvent { outcome: LineageOutcome::Fixed, .. })
                )
            })
            .map(|m| m.day)
            .collect();
        days.sort_unstable();
        days
    }
}

/// The successful-mutation counting process `H`: a step function jumping at
/// the arrival days of eventually fixed mutations.
#[derive(Debug, Clone)]
pub struct SuccessCount {
    jump_days: Vec<u64>,
}

impl SuccessCount {
    pub fn value_at(&self, day: u64) -> u64 {
        self.jump_days.partition_point(|&d| d <= day) as u64
    }

    pub fn jump_days(&self) -> &[u64] {
        &self.jump_days
    }

    pub fn total(&self) -> u64 {
        self.jump_days.len() as u64
    }
}

/// Builds `H` from a trajectory. Lineages still segregating at the horizon
/// are censored and excluded, with a warning.
pub fn successful_mutation_count(trajectory: &Trajectory) -> SuccessCount {
    let censored = trajectory
        .resolutions
        .iter()
        .filter(|r| r.outcome == LineageOutcome::Censored)
        .count();
    if censored > 0 {
        log::warn!(
            "{censored} lineage(s) still segregating at the horizon are excluded from the successful-mutation count"
        );
    }
    SuccessCount { jump_days: trajectory.success_arrival_days() }
}

/// A detected interference event: `second` arrived while `first` was still
/// segregating.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterferenceEvent {
    pub first_lineage: u64,
    pub second_lineage: u64,
    pub day: u64,
}

/// Post-hoc interference scan of an event log.
#[derive(Debug, Clone, Serialize)]
pub struct InterferenceReport {
    pub events: Vec<InterferenceEvent>,
    /// Fraction of successive mutation pairs that interfere.
    pub successive_pair_frequency: f64,
    pub arrivals: u64,
}

/// Flags every mutation that arrived while an earlier lineage was
/// unresolved, plus the empirical frequency over successive pairs.
pub fn detect_interference(trajectory: &Trajectory) -> InterferenceReport {
    let mut events = Vec::new();
    let mut arrivals: Vec<&MutationEvent> = trajectory.mutations.iter().collect();
    arrivals.sort_by_key(|m| m.day);
    for (i, first) in arrivals.iter().enumerate() {
        let resolution = trajectory
            .resolution_of(first.lineage)
            .map(|r| r.day)
            .unwrap_or(u64::MAX);
        for second in arrivals.iter().skip(i + 1) {
            if second.day >= resolution {
                break;
            }
            events.push(InterferenceEvent {
                first_lineage: first.lineage,
                second_lineage: second.lineage,
                day: second.day,
            });
        }
    }
    let successive = arrivals
        .windows(2)
        .filter(|w| {
            let res = trajectory
                .resolution_of(w[0].lineage)
                .map(|r| r.day)
                .unwrap_or(u64::MAX);
            w[1].day < res
        })
        .count();
    let pairs = arrivals.len().saturating_sub(1);
    InterferenceReport {
        events,
        successive_pair_frequency: if pairs == 0 {
            0.0
        } else {
            successive as f64 / pairs as f64
        },
        arrivals: arrivals.len() as u64,
    }
}

/// Internal class bookkeeping: the population classes plus, per class, the
/// set of unresolved lineages its members carry.
#[derive(Debug, Clone)]
struct EngineClass {
    rate: f64,
    count: u64,
    lineage: u64,
    carries: Vec<u64>,
}

enum StopRule {
    AtHorizon,
    /// Stop once this many lineages have fixed (the horizon still caps the
    /// run).
    FixedCount(u64),
}

struct Engine<'a, R: Rng + ?Sized> {
    params: &'a ModelParams,
    rng: &'a mut R,
    day: u64,
    classes: Vec<EngineClass>,
    unresolved: Vec<u64>,
    next_lineage: u64,
    next_mutation_day: Option<u64>,
    mutations: Vec<MutationEvent>,
    resolutions: Vec<ResolutionEvent>,
    fixed_count: u64,
}

impl<'a, R: Rng + ?Sized> Engine<'a, R> {
    fn new(params: &'a ModelParams, rng: &'a mut R) -> Self {
        let classes = vec![EngineClass {
            rate: params.r0,
            count: params.n,
            lineage: 0,
            carries: Vec::new(),
        }];
        let mut engine = Engine {
            params,
            rng,
            day: 0,
            classes,
            unresolved: Vec::new(),
            next_lineage: 1,
            next_mutation_day: None,
            mutations: Vec::new(),
            resolutions: Vec::new(),
            fixed_count: 0,
        };
        engine.next_mutation_day = engine.draw_arrival(0);
        engine
    }

    /// Next arrival at or after `from`: per-day Bernoulli(mu) realized as a
    /// geometric gap.
    fn draw_arrival(&mut self, from: u64) -> Option<u64> {
        let mu = self.params.mu();
        if mu <= 0.0 {
            return None;
        }
        if mu >= 1.0 {
            return Some(from);
        }
        let gap = Geometric::new(mu).expect("mu in (0,1)").sample(self.rng);
        Some(from + gap)
    }

    fn fitness(&self) -> f64 {
        relative_fitness_classes(
            self.classes.iter().map(|c| (c.rate, c.count)),
            self.params.n,
            self.params.r0,
            self.params.u,
        )
    }

    fn heterogeneous(&self) -> bool {
        self.classes
            .windows(2)
            .any(|w| (w[0].rate - w[1].rate).abs() > f64::EPSILON * w[0].rate.abs())
    }

    fn apply_mutation(&mut self) {
        let fitness = self.fitness();
        let interfering = self.heterogeneous();
        // victim chosen uniformly among the n individuals
        let mut pick = self.rng.random_range(0..self.params.n);
        let mut victim = self.classes.len() - 1;
        for (i, c) in self.classes.iter().enumerate() {
            if pick < c.count {
                victim = i;
                break;
            }
            pick -= c.count;
        }
        let lineage = self.next_lineage;
        self.next_lineage += 1;
        let parent = &mut self.classes[victim];
        let parent_lineage = parent.lineage;
        let parent_rate = parent.rate;
        let new_rate = parent_rate + self.params.psi(fitness) * self.params.rho();
        let mut carries = parent.carries.clone();
        carries.push(lineage);
        parent.count -= 1;
        if parent.count == 0 {
            self.classes.remove(victim);
        }
        self.classes.push(EngineClass { rate: new_rate, count: 1, lineage, carries });
        self.unresolved.push(lineage);
        self.mutations.push(MutationEvent {
            day: self.day,
            lineage,
            parent_lineage,
            parent_rate,
            new_rate,
            fitness_at_arrival: fitness,
            interfering,
        });
    }

    /// Grows every class to the common day length and dilutes back to `n`,
    /// dropping emptied classes.
    fn transition(&mut self) -> Result<()> {
        let state = PopulationState::new(
            self.classes
                .iter()
                .map(|c| RateClass { rate: c.rate, count: c.count, lineage: c.lineage })
                .collect(),
            self.params.n,
        )?;
        let outcome = day_transition_multitype(&state, self.params.gamma, self.rng)?;
        let mut next = Vec::with_capacity(outcome.post_sample.n_classes());
        for post in outcome.post_sample.classes() {
            let old = self
                .classes
                .iter()
                .find(|c| c.lineage == post.lineage)
                .expect("surviving class existed");
            next.push(EngineClass {
                rate: old.rate,
                count: post.count,
                lineage: old.lineage,
                carries: old.carries.clone(),
            });
        }
        self.classes = next;
        Ok(())
    }

    /// Fixation/loss check for every unresolved lineage against the
    /// current (start-of-day) population.
    fn resolve(&mut self) {
        let n = self.params.n;
        let mut resolved = Vec::new();
        for &lineage in &self.unresolved {
            let carriers: u64 = self
                .classes
                .iter()
                .filter(|c| c.carries.contains(&lineage))
                .map(|c| c.count)
                .sum();
            if carriers == 0 {
                resolved.push((lineage, LineageOutcome::Lost));
            } else if carriers == n {
                resolved.push((lineage, LineageOutcome::Fixed));
            }
        }
        for (lineage, outcome) in resolved {
            self.unresolved.retain(|&l| l != lineage);
            if outcome == LineageOutcome::Fixed {
                self.fixed_count += 1;
                // carried by everyone; no longer worth tracking per class
                for c in &mut self.classes {
                    c.carries.retain(|&l| l != lineage);
                }
            }
            self.resolutions.push(ResolutionEvent { lineage, day: self.day, outcome });
        }
    }

    fn run(
        mut self,
        horizon: u64,
        record_every: Option<u64>,
        stop: StopRule,
    ) -> Result<Trajectory> {
        let cadence = record_every.unwrap_or(0);
        let mut records: Vec<TrajectoryRecord> = Vec::new();
        let record_day = |day: u64,
                              fitness: f64,
                              n_classes: usize,
                              interference: bool,
                              records: &mut Vec<TrajectoryRecord>| {
            records.push(TrajectoryRecord {
                day,
                fitness,
                successful_mutations: 0, // filled after resolution
                n_classes,
                interference,
            });
        };
        while self.day < horizon {
            if let StopRule::FixedCount(target) = stop {
                if self.fixed_count >= target {
                    break;
                }
            }
            let homogeneous_idle = self.classes.len() == 1
                && self.unresolved.is_empty()
                && self.next_mutation_day.map_or(true, |d| d > self.day);
            if homogeneous_idle {
                // nothing can change until the next arrival: dilution of a
                // single class always returns n of it
                let jump_to = self.next_mutation_day.unwrap_or(horizon).min(horizon);
                if cadence > 0 {
                    let fitness = self.fitness();
                    let mut d = self.day.div_ceil(cadence) * cadence;
                    while d < jump_to {
                        record_day(d, fitness, 1, false, &mut records);
                        d += cadence;
                    }
                }
                self.day = jump_to;
                continue;
            }
            if cadence > 0 && self.day % cadence == 0 {
                record_day(self.day, self.fitness(), self.classes.len(), self.heterogeneous(), &mut records);
            }
            if self.next_mutation_day == Some(self.day) {
                self.apply_mutation();
                self.next_mutation_day = self.draw_arrival(self.day + 1);
            }
            self.transition()?;
            self.day += 1;
            self.resolve();
        }
        if cadence > 0 && self.day % cadence == 0 && self.day == horizon {
            record_day(self.day, self.fitness(), self.classes.len(), self.heterogeneous(), &mut records);
        }
        // censor what is still segregating
        for &lineage in &self.unresolved {
            self.resolutions.push(ResolutionEvent {
                lineage,
                day: self.day,
                outcome: LineageOutcome::Censored,
            });
        }
        let final_state = PopulationState::new(
            self.classes
                .iter()
                .map(|c| RateClass { rate: c.rate, count: c.count, lineage: c.lineage })
                .collect(),
            self.params.n,
        )?;
        let mut trajectory = Trajectory {
            records,
            mutations: self.mutations,
            resolutions: self.resolutions,
            horizon: self.day,
            final_state,
        };
        let h = successful_mutation_count(&trajectory);
        for rec in &mut trajectory.records {
            rec.successful_mutations = h.value_at(rec.day);
        }
        Ok(trajectory)
    }
}

/// Runs one replicate for `horizon_days`, sampling a record every
/// `record_every` days (0 records only day 0 and the final day).
pub fn run_experiment<R: Rng + ?Sized>(
    params: &ModelParams,
    horizon_days: u64,
    record_every: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    let cadence = if record_every == 0 { horizon_days.max(1) } else { record_every };
    Engine::new(params, rng).run(horizon_days, Some(cadence), StopRule::AtHorizon)
}

/// Runs until `target` lineages have fixed (or `day_cap` passed) and
/// returns the full trajectory; arrival days of the successes are on
/// [`Trajectory::success_arrival_days`].
pub fn run_until_successes<R: Rng + ?Sized>(
    params: &ModelParams,
    target: u64,
    day_cap: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    Engine::new(params, rng).run(day_cap, None, StopRule::FixedCount(target))
}
