//! Many-objective sorting search over NEAT populations.

use crate::error::{Error, Result};
use crate::fitness::ObjectiveId;
use crate::genome::{crossover, rebase_representatives, speciate, Fitter, Genome, Species, SpeciesId};
use crate::preference::{species_sizes, PreferenceContext, SecondaryCriterion};
use crate::search::{Evaluated, Search, SearchContext};
use rand::seq::IndexedRandom;
use rand::Rng;
use std::cmp::Ordering;

#[derive(Clone, Debug, PartialEq)]
pub struct MosaConfig {
    pub population_size: usize,
    pub crossover_probability: f64,
}

impl Default for MosaConfig {
    fn default() -> Self {
        MosaConfig { population_size: 50, crossover_probability: 0.75 }
    }
}

impl MosaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(Error::Config("mosa needs a population of at least 2 and a crossover probability in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Pareto dominance restricted to `objectives` (lower is better).
pub fn dominates(x: &[f64], y: &[f64], objectives: &[ObjectiveId]) -> bool {
    let mut strictly = false;
    for &k in objectives {
        if x[k] > y[k] {
            return false;
        }
        strictly |= x[k] < y[k];
    }
    strictly
}

/// Preference sorting: front 0 holds the best candidate for each
/// objective (ties to the higher secondary score, then the lower index);
/// the rest are ranked by non-dominated sorting on `objectives`.
pub fn preference_sorting(fitness: &[&[f64]], objectives: &[ObjectiveId], secondary: &[f64]) -> Vec<Vec<usize>> {
    let n = fitness.len();
    if n == 0 {
        return Vec::new();
    }
    if objectives.is_empty() {
        return vec![(0..n).collect()];
    }
    let mut in_first = vec![false; n];
    let mut first = Vec::new();
    for &k in objectives {
        let best = (0..n)
            .min_by(|&a, &b| {
                fitness[a][k]
                    .total_cmp(&fitness[b][k])
                    .then_with(|| secondary[b].total_cmp(&secondary[a]))
                    .then(a.cmp(&b))
            })
            .expect("non-empty");
        if !in_first[best] {
            in_first[best] = true;
            first.push(best);
        }
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !in_first[i]).collect();
    let mut fronts = vec![first];
    fronts.extend(fast_non_dominated_sort(fitness, &rest, objectives));
    fronts
}

/// NSGA-II fast non-dominated sorting of `members`.
pub fn fast_non_dominated_sort(fitness: &[&[f64]], members: &[usize], objectives: &[ObjectiveId]) -> Vec<Vec<usize>> {
    let m = members.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut counts = vec![0usize; m];
    for i in 0..m {
        for j in i + 1..m {
            let (a, b) = (fitness[members[i]], fitness[members[j]]);
            if dominates(a, b, objectives) {
                dominated[i].push(j);
                counts[j] += 1;
            } else if dominates(b, a, objectives) {
                dominated[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..m).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current.iter().map(|&i| members[i]).collect());
        current = next;
    }
    fronts
}

#[derive(Clone, Debug)]
struct Member {
    individual: Evaluated,
    rank: usize,
    secondary: f64,
}

impl AsRef<Genome> for Member {
    fn as_ref(&self) -> &Genome {
        &self.individual.genome
    }
}

fn better(a: &Member, b: &Member) -> Ordering {
    a.rank.cmp(&b.rank).then_with(|| b.secondary.total_cmp(&a.secondary))
}

pub struct Mosa {
    config: MosaConfig,
    population: Vec<Member>,
    species: Vec<Species>,
    next_species: SpeciesId,
}

impl Mosa {
    pub fn new(config: MosaConfig) -> Self {
        Mosa { config, population: Vec::new(), species: Vec::new(), next_species: 0 }
    }

    pub fn population(&self) -> impl Iterator<Item = &Evaluated> {
        self.population.iter().map(|m| &m.individual)
    }

    fn tournament<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let a = rng.random_range(0..self.population.len());
        let b = rng.random_range(0..self.population.len());
        if better(&self.population[b], &self.population[a]) == Ordering::Less { b } else { a }
    }

    /// Partner for `parent`: another member of its species, or anyone when
    /// the species has no other member.
    fn partner<R: Rng + ?Sized>(&self, parent: usize, rng: &mut R) -> usize {
        let mates: Vec<usize> = self
            .species
            .iter()
            .find(|s| s.members.contains(&parent))
            .map(|s| s.members.iter().copied().filter(|&m| m != parent).collect())
            .unwrap_or_default();
        match mates.choose(rng) {
            Some(&m) => m,
            None => rng.random_range(0..self.population.len()),
        }
    }

    /// Produces `population_size` children by tournament selection,
    /// intra-species crossover and mutation.
    pub fn generate_offspring(&self, ctx: &mut SearchContext) -> Vec<Genome> {
        (0..self.config.population_size)
            .map(|_| {
                let p = self.tournament(&mut ctx.rng);
                let child = if ctx.rng.random::<f64>() < self.config.crossover_probability {
                    let q = self.partner(p, &mut ctx.rng);
                    let fitter = match better(&self.population[p], &self.population[q]) {
                        Ordering::Less => Fitter::First,
                        Ordering::Greater => Fitter::Second,
                        Ordering::Equal => Fitter::Equal,
                    };
                    crossover(&self.population[p].individual.genome, &self.population[q].individual.genome, fitter, &ctx.mutation, &mut ctx.rng)
                } else {
                    self.population[p].individual.genome.clone()
                };
                ctx.mutate(&child, true)
            })
            .collect()
    }

    /// Ranks `candidates` and keeps the best `population_size` of them.
    fn select(&mut self, ctx: &mut SearchContext, candidates: Vec<Evaluated>) -> Result<()> {
        let objectives = ctx.reachable_uncovered();
        let mut species = speciate(&candidates, &self.species, &ctx.speciation, &mut self.next_species);
        rebase_representatives(&mut species, &candidates);
        let sizes = species_sizes(&species, candidates.len());
        let behaviors: Vec<&[f64]> = candidates.iter().map(|c| c.behavior.as_slice()).collect();
        let secondary = PreferenceContext {
            population: &candidates,
            species_sizes: &sizes,
            behaviors: &behaviors,
            archive: &ctx.archive,
            coefficients: &ctx.speciation.coefficients,
        }
        .scores(ctx.criterion)?;
        let fitness: Vec<&[f64]> = candidates.iter().map(|c| c.fitness.as_slice()).collect();
        let fronts = preference_sorting(&fitness, &objectives, &secondary);

        let mut chosen: Vec<(usize, usize)> = Vec::new();
        for (rank, front) in fronts.iter().enumerate() {
            let room = self.config.population_size - chosen.len();
            if front.len() <= room {
                chosen.extend(front.iter().map(|&i| (i, rank)));
            } else {
                let mut front = front.clone();
                front.sort_by(|&a, &b| secondary[b].total_cmp(&secondary[a]).then(a.cmp(&b)));
                chosen.extend(front[..room].iter().map(|&i| (i, rank)));
            }
            if chosen.len() == self.config.population_size {
                break;
            }
        }
        if ctx.criterion == SecondaryCriterion::Novelty {
            for b in &behaviors {
                ctx.archive.maybe_record(b, &mut ctx.rng);
            }
        }
        let mut slots: Vec<Option<Evaluated>> = candidates.into_iter().map(Some).collect();
        self.population = chosen
            .into_iter()
            .map(|(i, rank)| Member { individual: slots[i].take().expect("chosen once"), rank, secondary: secondary[i] })
            .collect();
        self.species = speciate(&self.population, &species, &ctx.speciation, &mut self.next_species);
        rebase_representatives(&mut self.species, &self.population);
        Ok(())
    }
}

impl Search for Mosa {
    fn step(&mut self, ctx: &mut SearchContext) -> Result<()> {
        let children = if self.population.is_empty() {
            (0..self.config.population_size).map(|_| ctx.random_genome()).collect()
        } else {
            self.generate_offspring(ctx)
        };
        let evaluated = ctx.evaluate_all(children)?;
        let mut candidates: Vec<Evaluated> = std::mem::take(&mut self.population).into_iter().map(|m| m.individual).collect();
        candidates.extend(evaluated);
        self.select(ctx, candidates)
    }
}
