//! Decomposition search: one subproblem per reachable uncovered objective,
//! with novice topologies shielded from selection pressure.

use crate::error::{Error, Result};
use crate::fitness::ObjectiveId;
use crate::genome::{crossover, Fitter, Genome, Innovation};
use crate::search::{Evaluated, Search, SearchContext};
use rand::seq::IndexedRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq)]
pub struct NewsdConfig {
    pub population_size: usize,
    /// Generations during which a new topology stays protected.
    pub novice_generations: u64,
    pub max_topologies: usize,
    /// Parents drawn per generation.
    pub parent_count: usize,
    pub mutation_probability: f64,
}

impl Default for NewsdConfig {
    fn default() -> Self {
        NewsdConfig { population_size: 50, novice_generations: 3, max_topologies: 20, parent_count: 25, mutation_probability: 0.75 }
    }
}

impl NewsdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.max_topologies < 1 {
            return Err(Error::Config("newsd needs a population of at least 2 and at least one topology".into()));
        }
        if self.parent_count < 1 || self.parent_count > self.population_size {
            return Err(Error::Config("newsd parent count must lie in [1, population size]".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(Error::Config("newsd mutation probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologyRecord {
    pub count: usize,
    pub creation: u64,
    /// The minimal topology every run starts from; never a novice.
    pub founder: bool,
}

impl TopologyRecord {
    pub fn is_novice(&self, generation: u64, novice_generations: u64) -> bool {
        !self.founder && generation.saturating_sub(self.creation) <= novice_generations
    }
}

pub type Signature = Vec<Innovation>;

/// Minimal-score genome per subproblem, ties to the lower genome id;
/// returned as sorted population indices.
pub fn elite_set(population: &[Evaluated], subproblems: &[ObjectiveId]) -> Vec<usize> {
    let mut elite = BTreeSet::new();
    for &k in subproblems {
        if let Some(best) = (0..population.len())
            .min_by(|&a, &b| population[a].fitness[k].total_cmp(&population[b].fitness[k]).then(population[a].id.cmp(&population[b].id)))
        {
            elite.insert(best);
        }
    }
    elite.into_iter().collect()
}

/// Indices of members whose topology is still a novice, newest first.
pub fn protected_set(
    population: &[Evaluated],
    records: &BTreeMap<Signature, TopologyRecord>,
    generation: u64,
    novice_generations: u64,
) -> Vec<usize> {
    let mut out: Vec<(u64, usize)> = population
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let r = records.get(&e.genome.signature())?;
            r.is_novice(generation, novice_generations).then_some((r.creation, i))
        })
        .collect();
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    out.into_iter().map(|(_, i)| i).collect()
}

/// Roulette over `candidates` on 1/(1+f) for subproblem `k`.
pub fn roulette<R: Rng + ?Sized>(population: &[Evaluated], candidates: &[usize], k: ObjectiveId, rng: &mut R) -> usize {
    let weights: Vec<f64> = candidates.iter().map(|&i| 1.0 / (1.0 + population[i].fitness[k])).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (pos, w) in weights.iter().enumerate() {
        if x < *w {
            return pos;
        }
        x -= w;
    }
    candidates.len() - 1
}

/// Elite and protected members first (protected truncated oldest-last),
/// then roulette draws on random subproblems until `size` parents exist.
pub fn selection<R: Rng + ?Sized>(
    population: &[Evaluated],
    elite: &[usize],
    protected: &[usize],
    subproblems: &[ObjectiveId],
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(size);
    for &i in elite.iter().chain(protected) {
        if chosen.len() == size {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    let mut remaining: Vec<usize> = (0..population.len()).filter(|i| !chosen.contains(i)).collect();
    while chosen.len() < size && !remaining.is_empty() {
        let pos = match subproblems.choose(rng) {
            Some(&k) => roulette(population, &remaining, k, rng),
            None => rng.random_range(0..remaining.len()),
        };
        chosen.push(remaining.remove(pos));
    }
    chosen
}

/// Builds the next population out of `pool`.
pub fn population_update<R: Rng + ?Sized>(
    pool: &[Evaluated],
    protected: &[usize],
    subproblems: &[ObjectiveId],
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut taken = vec![false; pool.len()];
    let mut next = Vec::with_capacity(size);
    let admit = |i: usize, next: &mut Vec<usize>, taken: &mut Vec<bool>| {
        if next.len() < size && !taken[i] {
            taken[i] = true;
            next.push(i);
        }
    };
    for &i in protected {
        admit(i, &mut next, &mut taken);
    }
    let ranked: BTreeMap<ObjectiveId, Vec<usize>> = subproblems
        .iter()
        .map(|&k| {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.sort_by(|&a, &b| pool[a].fitness[k].total_cmp(&pool[b].fitness[k]).then(pool[a].id.cmp(&pool[b].id)));
            (k, order)
        })
        .collect();
    if !subproblems.is_empty() {
        let n = size / subproblems.len();
        for &k in subproblems {
            let mut admitted = 0;
            for &i in &ranked[&k] {
                if admitted == n {
                    break;
                }
                if !taken[i] {
                    admit(i, &mut next, &mut taken);
                    admitted += 1;
                }
            }
        }
    }
    while next.len() < size.min(pool.len()) {
        let i = match subproblems.choose(rng) {
            Some(k) => *ranked[k].iter().find(|&&i| !taken[i]).expect("pool larger than population"),
            None => (0..pool.len()).find(|&i| !taken[i]).expect("pool larger than population"),
        };
        admit(i, &mut next, &mut taken);
    }
    next
}

pub struct Newsd {
    config: NewsdConfig,
    population: Vec<Evaluated>,
    records: BTreeMap<Signature, TopologyRecord>,
    generation: u64,
}

impl Newsd {
    pub fn new(config: NewsdConfig) -> Self {
        Newsd { config, population: Vec::new(), records: BTreeMap::new(), generation: 0 }
    }

    pub fn population(&self) -> &[Evaluated] {
        &self.population
    }

    pub fn records(&self) -> &BTreeMap<Signature, TopologyRecord> {
        &self.records
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn note_topology(&mut self, genome: &Genome) {
        let generation = self.generation;
        self.records.entry(genome.signature()).or_insert(TopologyRecord { count: 0, creation: generation, founder: false });
    }

    fn recount(&mut self) {
        for r in self.records.values_mut() {
            r.count = 0;
        }
        for e in &self.population {
            if let Some(r) = self.records.get_mut(&e.genome.signature()) {
                r.count += 1;
            }
        }
        self.records.retain(|_, r| r.count > 0);
    }

    /// One child per slot, parents taken round-robin.
    pub fn reproduction(&mut self, ctx: &mut SearchContext, parents: &[usize], subproblems: &[ObjectiveId]) -> Vec<Genome> {
        let mut children = Vec::with_capacity(self.config.population_size);
        for j in 0..self.config.population_size.max(parents.len()) {
            let p = &self.population[parents[j % parents.len()]];
            let child = if ctx.rng.random::<f64>() < self.config.mutation_probability {
                let structural = self.records.len() < self.config.max_topologies;
                ctx.mutate(&p.genome, structural)
            } else {
                let q = &self.population[parents[ctx.rng.random_range(0..parents.len())]];
                let second_dominates = crate::mosa::dominates(&q.fitness, &p.fitness, subproblems);
                let fitter = if second_dominates { Fitter::Second } else { Fitter::First };
                crossover(&p.genome, &q.genome, fitter, &ctx.mutation, &mut ctx.rng)
            };
            if self.records.len() < self.config.max_topologies || self.records.contains_key(&child.signature()) {
                self.note_topology(&child);
                children.push(child);
            } else {
                // A crossover recombined a topology that would exceed the cap.
                children.push(ctx.mutate(&p.genome, false));
            }
        }
        children
    }

    fn initialise(&mut self, ctx: &mut SearchContext) -> Result<()> {
        let genomes: Vec<Genome> = (0..self.config.population_size).map(|_| ctx.random_genome()).collect();
        for g in &genomes {
            self.records.entry(g.signature()).or_insert(TopologyRecord { count: 0, creation: 0, founder: true });
        }
        self.population = ctx.evaluate_all(genomes)?;
        self.recount();
        Ok(())
    }
}

impl Search for Newsd {
    fn step(&mut self, ctx: &mut SearchContext) -> Result<()> {
        if self.population.is_empty() {
            return self.initialise(ctx);
        }
        self.generation += 1;
        let subproblems = ctx.reachable_uncovered();
        let elite = elite_set(&self.population, &subproblems);
        let protected = protected_set(&self.population, &self.records, self.generation, self.config.novice_generations);
        let parents = selection(&self.population, &elite, &protected, &subproblems, self.config.parent_count, &mut ctx.rng);
        let children = self.reproduction(ctx, &parents, &subproblems);
        let offspring = ctx.evaluate_all(children)?;

        let subproblems = ctx.reachable_uncovered();
        let mut pool = std::mem::take(&mut self.population);
        pool.extend(offspring);
        let protected = protected_set(&pool, &self.records, self.generation, self.config.novice_generations);
        let next = population_update(&pool, &protected, &subproblems, self.config.population_size, &mut ctx.rng);
        let mut slots: Vec<Option<Evaluated>> = pool.into_iter().map(Some).collect();
        self.population = next.into_iter().map(|i| slots[i].take().expect("admitted once")).collect();
        self.recount();
        Ok(())
    }
}
