//! Collective-animal-behavior (CAB) multimodal optimizer.
//!
//! A population of `N_p` positions evolves under four operators each
//! generation:
//!
//! 1. the first `B` new positions are small perturbations of the historical
//!    memory `M_h` (keep the position of the best individuals);
//! 2. the remaining positions move towards or away from their nearest memory
//!    element, `M_h` with probability `H` and otherwise the generation
//!    memory `M_g`;
//! 3. with probability `P` a position is instead resampled uniformly;
//! 4. `M_h` and `M_g` are merged and compete for space: of two elements
//!    closer than `rho`, the fitter one stays.
//!
//! Fitness is maximized. Both the fitness and the distance used for
//! competition come from an [`Objective`], so the same optimizer drives the
//! ellipse detector and plain numeric benchmarks.
//!
//! Random draws happen in a fixed order (elites first, then the remaining
//! individuals in index order; per individual: branch, then either the
//! memory choice or the resample coordinates, then `r`, then the sign), so a
//! seed fully determines a run.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CabError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Box constraints of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    low: Vec<f64>,
    high: Vec<f64>,
}

impl Bounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self, CabError> {
        if low.is_empty() || low.len() != high.len() {
            return Err(CabError::InvalidBounds(format!(
                "need matching non-empty vectors, got {} and {}",
                low.len(),
                high.len()
            )));
        }
        if let Some(j) = (0..low.len()).find(|&j| !(low[j] < high[j]) || !high[j].is_finite()) {
            return Err(CabError::InvalidBounds(format!(
                "dimension {j}: low {} must be below high {}",
                low[j], high[j]
            )));
        }
        Ok(Self { low, high })
    }

    /// Same interval in every one of `dim` dimensions.
    pub fn uniform(dim: usize, low: f64, high: f64) -> Result<Self, CabError> {
        Self::new(vec![low; dim], vec![high; dim])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    pub fn range(&self, j: usize) -> f64 {
        self.high[j] - self.low[j]
    }

    pub fn clamp(&self, position: &mut [f64]) {
        for (j, v) in position.iter_mut().enumerate() {
            *v = v.clamp(self.low[j], self.high[j]);
        }
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position.len() == self.dim()
            && position
                .iter()
                .enumerate()
                .all(|(j, v)| self.low[j] <= *v && *v <= self.high[j])
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.low[j] + rng.gen::<f64>() * self.range(j))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CabConfig {
    /// `N_p`.
    pub population_size: usize,
    /// `B`, the capacity of both memories.
    pub memory_size: usize,
    /// `H`, chance of moving relative to `M_h` rather than `M_g`.
    pub prob_h: f64,
    /// `P`, chance of a random restart.
    pub prob_p: f64,
    /// `NI`, number of generations including the initial one.
    pub iterations: usize,
    /// Competition distance. `None` uses [`default_rho`] of the bounds.
    pub rho: Option<f64>,
    /// Half-width of the elite perturbation, as a fraction of each
    /// dimension's range.
    pub perturbation_frac: f64,
}

impl Default for CabConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            memory_size: 12,
            prob_h: 0.5,
            prob_p: 0.1,
            iterations: 200,
            rho: None,
            perturbation_frac: 0.01,
        }
    }
}

impl CabConfig {
    pub fn validate(&self) -> Result<(), CabError> {
        let bad = |msg: String| Err(CabError::InvalidConfig(msg));
        if self.memory_size < 1 {
            return bad("memory_size must be at least 1".into());
        }
        if self.memory_size >= self.population_size {
            return bad(format!(
                "memory_size {} must be below population_size {}",
                self.memory_size, self.population_size
            ));
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        for (name, p) in [("prob_h", self.prob_h), ("prob_p", self.prob_p)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.perturbation_frac >= 0.0) || !self.perturbation_frac.is_finite() {
            return bad(format!(
                "perturbation_frac must be non-negative, got {}",
                self.perturbation_frac
            ));
        }
        if let Some(rho) = self.rho {
            if !(rho >= 0.0) {
                return bad(format!("rho must be non-negative, got {rho}"));
            }
        }
        Ok(())
    }
}

/// A position together with its fitness and whatever the objective derived
/// from it while evaluating.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPosition<P> {
    pub position: Vec<f64>,
    pub fitness: f64,
    pub payload: P,
}

/// Fitness (maximized) and competition distance of a search problem.
pub trait Objective: Sync {
    type Payload: Clone + Send + Sync;
    type Error: Send;

    fn evaluate(&self, position: &[f64]) -> Result<(f64, Self::Payload), Self::Error>;

    fn distance(&self, a: &ScoredPosition<Self::Payload>, b: &ScoredPosition<Self::Payload>)
        -> f64;
}

/// Euclidean distance after scaling every dimension of `bounds` to `[0, 1]`.
pub fn normalized_distance(bounds: &Bounds, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (x, y))| ((x - y) / bounds.range(j)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Objective from a plain fitness closure, compared with
/// [`normalized_distance`].
pub struct FnObjective<F> {
    bounds: Bounds,
    fitness: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(bounds: Bounds, fitness: F) -> Self {
        Self { bounds, fitness }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    type Payload = ();
    type Error = std::convert::Infallible;

    fn evaluate(&self, position: &[f64]) -> Result<(f64, ()), Self::Error> {
        Ok(((self.fitness)(position), ()))
    }

    fn distance(&self, a: &ScoredPosition<()>, b: &ScoredPosition<()>) -> f64 {
        normalized_distance(&self.bounds, &a.position, &b.position)
    }
}

/// Competition distance for a `dim`-dimensional space whose bounds are
/// normalized to the unit hypercube: `1 / (10 dim)`.
pub fn default_rho(bounds: &Bounds) -> f64 {
    1.0 / (10.0 * bounds.dim() as f64)
}

/// `x ± r (m - x)`, clamped to `bounds`.
pub fn attract(bounds: &Bounds, x: &[f64], m: &[f64], r: f64, towards: bool) -> Vec<f64> {
    let sign = if towards { 1.0 } else { -1.0 };
    let mut out: Vec<f64> = x
        .iter()
        .zip(m)
        .map(|(xi, mi)| xi + sign * r * (mi - xi))
        .collect();
    bounds.clamp(&mut out);
    out
}

/// Merges the two memories and lets nearby elements compete.
///
/// Elements are visited by descending fitness (`M_h` first on ties); an
/// element survives only if it is at least `rho` away from every survivor so
/// far. At most `capacity` survivors are returned.
pub fn update_memory<P: Clone>(
    memory_h: &[ScoredPosition<P>],
    memory_g: &[ScoredPosition<P>],
    rho: f64,
    capacity: usize,
    distance: impl Fn(&ScoredPosition<P>, &ScoredPosition<P>) -> f64,
) -> Vec<ScoredPosition<P>> {
    let mut merged: Vec<&ScoredPosition<P>> = memory_h.iter().chain(memory_g).collect();
    merged.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    let mut kept: Vec<ScoredPosition<P>> = Vec::with_capacity(capacity);
    for candidate in merged {
        if kept.len() == capacity {
            break;
        }
        if kept.iter().all(|k| distance(k, candidate) >= rho) {
            kept.push(candidate.clone());
        }
    }
    kept
}

#[derive(Debug, Clone)]
pub struct CabState<P> {
    /// `X`, sorted by descending fitness.
    pub population: Vec<ScoredPosition<P>>,
    /// `M_g`, the best `B` of the current population.
    pub memory_g: Vec<ScoredPosition<P>>,
    /// `M_h`, distinct best positions seen so far.
    pub memory_h: Vec<ScoredPosition<P>>,
    /// Generations evaluated so far, the initial one included.
    pub generation: usize,
}

fn sort_descending<P>(population: &mut [ScoredPosition<P>]) {
    population.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

/// A configured optimizer over one objective.
pub struct Cab<'a, O: Objective> {
    bounds: &'a Bounds,
    config: &'a CabConfig,
    objective: &'a O,
    rho: f64,
}

impl<'a, O: Objective> Cab<'a, O> {
    pub fn new(
        bounds: &'a Bounds,
        config: &'a CabConfig,
        objective: &'a O,
    ) -> Result<Self, CabError> {
        config.validate()?;
        let rho = config.rho.unwrap_or_else(|| default_rho(bounds));
        Ok(Self {
            bounds,
            config,
            objective,
            rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn bounds(&self) -> &Bounds {
        self.bounds
    }

    fn evaluate(
        &self,
        positions: Vec<Vec<f64>>,
    ) -> Result<Vec<ScoredPosition<O::Payload>>, O::Error> {
        positions
            .into_iter()
            .map(|position| {
                let (fitness, payload) = self.objective.evaluate(&position)?;
                let fitness = if fitness.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    fitness
                };
                Ok(ScoredPosition {
                    position,
                    fitness,
                    payload,
                })
            })
            .collect()
    }

    fn nearest<'m>(
        &self,
        x: &ScoredPosition<O::Payload>,
        memory: &'m [ScoredPosition<O::Payload>],
    ) -> &'m ScoredPosition<O::Payload> {
        let mut best = &memory[0];
        let mut best_d = self.objective.distance(x, best);
        for m in &memory[1..] {
            let d = self.objective.distance(x, m);
            if d < best_d {
                best = m;
                best_d = d;
            }
        }
        best
    }

    /// Samples and evaluates the initial population; both memories start as
    /// its best `B` members.
    pub fn initialize<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<CabState<O::Payload>, O::Error> {
        let positions = (0..self.config.population_size)
            .map(|_| self.bounds.sample(rng))
            .collect();
        let mut population = self.evaluate(positions)?;
        sort_descending(&mut population);
        let memory_g = population[..self.config.memory_size].to_vec();
        Ok(CabState {
            memory_h: memory_g.clone(),
            memory_g,
            population,
            generation: 1,
        })
    }

    /// New positions `1..=B`: memory elements (reused cyclically) plus a
    /// uniform perturbation of at most `perturbation_frac` of each range.
    pub fn keep_best<R: Rng + ?Sized>(
        &self,
        state: &CabState<O::Payload>,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        let memory = &state.memory_h;
        (0..self.config.memory_size)
            .map(|l| {
                let source = &memory[l % memory.len()].position;
                let mut p: Vec<f64> = source
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let u = rng.gen::<f64>() * 2.0 - 1.0;
                        v + u * self.config.perturbation_frac * self.bounds.range(j)
                    })
                    .collect();
                self.bounds.clamp(&mut p);
                p
            })
            .collect()
    }

    /// New positions `B+1..=N_p` from the current individuals at the same
    /// ranks: random restart with probability `P`, otherwise attraction or
    /// repulsion relative to the nearest memory element.
    pub fn move_or_randomize<R: Rng + ?Sized>(
        &self,
        state: &CabState<O::Payload>,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        state.population[self.config.memory_size..]
            .iter()
            .map(|x| {
                if rng.gen::<f64>() < self.config.prob_p {
                    return self.bounds.sample(rng);
                }
                let memory = if rng.gen::<f64>() < self.config.prob_h {
                    &state.memory_h
                } else {
                    &state.memory_g
                };
                let m = self.nearest(x, memory);
                let r = rng.gen::<f64>();
                let towards = rng.gen::<bool>();
                attract(self.bounds, &x.position, &m.position, r, towards)
            })
            .collect()
    }

    /// Memory competition with this optimizer's `rho` and distance.
    pub fn update_memory(
        &self,
        memory_h: &[ScoredPosition<O::Payload>],
        memory_g: &[ScoredPosition<O::Payload>],
    ) -> Vec<ScoredPosition<O::Payload>> {
        update_memory(
            memory_h,
            memory_g,
            self.rho,
            self.config.memory_size,
            |a, b| self.objective.distance(a, b),
        )
    }

    /// Advances one generation.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut CabState<O::Payload>,
        rng: &mut R,
    ) -> Result<(), O::Error> {
        let mut positions = self.keep_best(state, rng);
        positions.extend(self.move_or_randomize(state, rng));
        let mut population = self.evaluate(positions)?;
        sort_descending(&mut population);
        state.memory_g = population[..self.config.memory_size].to_vec();
        state.memory_h = self.update_memory(&state.memory_h, &state.memory_g);
        state.population = population;
        state.generation += 1;
        Ok(())
    }

    /// Runs all generations, calling `observe` after each one.
    pub fn run_observed<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mut observe: impl FnMut(&CabState<O::Payload>),
    ) -> Result<Vec<ScoredPosition<O::Payload>>, O::Error> {
        let mut state = self.initialize(rng)?;
        observe(&state);
        while state.generation < self.config.iterations {
            self.step(&mut state, rng)?;
            observe(&state);
        }
        let mut memory = state.memory_h;
        sort_descending(&mut memory);
        Ok(memory)
    }

    /// Runs all generations and returns `M_h` by descending fitness.
    pub fn run<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<Vec<ScoredPosition<O::Payload>>, O::Error> {
        self.run_observed(rng, |_| {})
    }
}
