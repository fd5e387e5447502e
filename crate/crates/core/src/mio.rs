//! Many independent objective search: one small archive per objective,
//! sampled by feedback-directed counters, refined by short mutation ladders.

use crate::error::{Error, Result};
use crate::fitness::ObjectiveId;
use crate::genome::{mutate_structure, rebase_representatives, speciate, Genome, Species, SpeciesId};
use crate::preference::{is_better_than_worst, species_sizes, PreferenceContext, SecondaryCriterion};
use crate::search::{Evaluated, Search, SearchContext};
use rand::seq::IndexedRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// Counter value of an objective that was never sampled or unlocked.
pub const UNSAMPLED: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct MioConfig {
    /// Start value of the random-generation probability.
    pub random_probability: f64,
    /// Start value of the structural-mutation probability.
    pub structural_probability: f64,
    /// Mutations per ladder at the start.
    pub mutations: usize,
    /// Archive size limit at the start.
    pub archive_size: usize,
    /// Budget fraction at which the focus values are reached.
    pub focus: f64,
}

impl Default for MioConfig {
    fn default() -> Self {
        MioConfig { random_probability: 0.5, structural_probability: 0.5, mutations: 5, archive_size: 20, focus: 1.0 }
    }
}

impl MioConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.random_probability) || !unit(self.structural_probability) || !unit(self.focus) {
            return Err(Error::Config("mio probabilities and focus must lie in [0, 1]".into()));
        }
        if self.mutations < 1 || self.archive_size < 1 {
            return Err(Error::Config("mio needs at least one mutation and an archive size of at least 1".into()));
        }
        Ok(())
    }
}

/// Parameter values for the current budget fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MioParameters {
    pub random_probability: f64,
    pub structural_probability: f64,
    pub mutations: usize,
    pub archive_size: usize,
}

impl MioConfig {
    /// Linear move from the start values towards the focus values
    /// (no random generation, no structural mutation, archives of one,
    /// twice the mutations), arriving when `fraction` reaches `focus`.
    pub fn parameters(&self, fraction: f64) -> MioParameters {
        let t = if self.focus <= 0.0 { 1.0 } else { (fraction / self.focus).clamp(0.0, 1.0) };
        let lerp = |from: f64, to: f64| from + (to - from) * t;
        MioParameters {
            random_probability: lerp(self.random_probability, 0.0),
            structural_probability: lerp(self.structural_probability, 0.0),
            mutations: lerp(self.mutations as f64, 2.0 * self.mutations as f64).round().max(1.0) as usize,
            archive_size: lerp(self.archive_size as f64, 1.0).round().max(1.0) as usize,
        }
    }
}

pub fn heuristic(fitness: f64) -> f64 {
    1.0 / (1.0 + fitness)
}

#[derive(Clone, Debug)]
pub struct ArchiveMember {
    pub individual: Evaluated,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct ObjectiveArchive {
    /// Best first.
    pub members: Vec<ArchiveMember>,
    pub counter: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterEvent {
    Sampled { objective: ObjectiveId, before: u64, after: u64 },
    /// The archive's best heuristic value went up.
    Improved { objective: ObjectiveId },
    ResetOnImprovement { objective: ObjectiveId },
    /// A parent objective was covered.
    ResetOnUnlock { objective: ObjectiveId },
}

/// Where the next ladder starts.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    GenerateNew(ObjectiveId),
    Sample(ObjectiveId, Vec<Evaluated>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReplacementStats {
    /// Candidates offered to an archive.
    pub updates: u64,
    /// Full-archive comparisons against the worst member.
    pub comparisons: u64,
    /// Comparisons where fitness tied.
    pub ties: u64,
    /// Ties the secondary scores told apart.
    pub secondary_decided: u64,
}

impl ReplacementStats {
    pub fn plus(self, other: &ReplacementStats) -> ReplacementStats {
        ReplacementStats {
            updates: self.updates + other.updates,
            comparisons: self.comparisons + other.comparisons,
            ties: self.ties + other.ties,
            secondary_decided: self.secondary_decided + other.secondary_decided,
        }
    }
}

pub struct Mio {
    config: MioConfig,
    params: MioParameters,
    archives: Vec<ObjectiveArchive>,
    species: Vec<Species>,
    next_species: SpeciesId,
    /// Genomes that reached at least one objective in the current ladder.
    round: Vec<Evaluated>,
    log: Vec<CounterEvent>,
    stats: Vec<ReplacementStats>,
}

impl Mio {
    pub fn new(config: MioConfig) -> Self {
        let params = config.parameters(0.0);
        Mio {
            config,
            params,
            archives: Vec::new(),
            species: Vec::new(),
            next_species: 0,
            round: Vec::new(),
            log: Vec::new(),
            stats: Vec::new(),
        }
    }

    pub fn parameters(&self) -> MioParameters {
        self.params
    }

    pub fn archive(&self, objective: ObjectiveId) -> &ObjectiveArchive {
        &self.archives[objective]
    }

    pub fn counter_log(&self) -> &[CounterEvent] {
        &self.log
    }

    /// Replacement statistics summed over all objectives.
    pub fn replacement_stats(&self) -> ReplacementStats {
        self.stats.iter().fold(ReplacementStats::default(), |a, b| a.plus(b))
    }

    pub fn replacement_stats_for(&self, objective: ObjectiveId) -> ReplacementStats {
        self.stats.get(objective).copied().unwrap_or_default()
    }

    fn ensure_archives(&mut self, objectives: usize) {
        if self.archives.is_empty() {
            self.archives = vec![ObjectiveArchive { members: Vec::new(), counter: UNSAMPLED }; objectives];
            self.stats = vec![ReplacementStats::default(); objectives];
        }
    }

    /// Moves the parameters to the given budget fraction, shrinking
    /// archives (worst members leave first).
    pub fn update_parameters(&mut self, fraction: f64) {
        self.params = self.config.parameters(fraction);
        for a in &mut self.archives {
            a.members.truncate(self.params.archive_size);
        }
    }

    /// Every genome currently held in some archive, once.
    fn archived(&self) -> Vec<&Evaluated> {
        let mut seen = BTreeMap::new();
        for a in &self.archives {
            for m in &a.members {
                seen.entry(m.individual.id).or_insert(&m.individual);
            }
        }
        seen.into_values().collect()
    }

    /// Speciates the archived genomes; returns them with their species.
    fn speciate_archived(&mut self, ctx: &SearchContext) -> (Vec<Evaluated>, Vec<Species>) {
        let population: Vec<Evaluated> = self.archived().into_iter().cloned().collect();
        let mut species = speciate(&population, &self.species, &ctx.speciation, &mut self.next_species);
        rebase_representatives(&mut species, &population);
        self.species = species.clone();
        (population, species)
    }

    pub fn select_source(&mut self, ctx: &mut SearchContext) -> Option<Source> {
        let reachable = ctx.reachable_uncovered();
        if reachable.is_empty() {
            return None;
        }
        let sampleable = reachable.iter().copied().filter(|&k| !self.archives[k].members.is_empty());
        // Lowest counter, ties to the lowest objective id.
        let chosen = sampleable.min_by_key(|&k| (self.archives[k].counter, k));
        let generate = ctx.rng.random::<f64>() < self.params.random_probability;
        match chosen {
            Some(k) if !generate => {
                let before = self.archives[k].counter;
                let after = if before == UNSAMPLED { 1 } else { before + 1 };
                self.archives[k].counter = after;
                self.log.push(CounterEvent::Sampled { objective: k, before, after });
                Some(Source::Sample(k, self.sample_per_species(ctx, k)))
            }
            _ => Some(Source::GenerateNew(*reachable.choose(&mut ctx.rng).expect("non-empty"))),
        }
    }

    /// One genome from each species present in archive `k`, best first.
    fn sample_per_species(&mut self, ctx: &mut SearchContext, k: ObjectiveId) -> Vec<Evaluated> {
        let (population, species) = self.speciate_archived(ctx);
        let index: BTreeMap<u64, usize> = population.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
        let mut groups: BTreeMap<SpeciesId, Vec<&Evaluated>> = BTreeMap::new();
        for m in &self.archives[k].members {
            let i = index[&m.individual.id];
            let s = species.iter().find(|s| s.members.contains(&i)).map(|s| s.id).expect("speciated");
            groups.entry(s).or_default().push(&m.individual);
        }
        groups.into_values().map(|g| (*g.choose(&mut ctx.rng).expect("non-empty")).clone()).collect()
    }

    fn secondary_pair(&mut self, ctx: &SearchContext, candidate: &Evaluated, incumbent: &Evaluated) -> Result<(f64, f64)> {
        let (mut population, _) = self.speciate_archived(ctx);
        if !population.iter().any(|e| e.id == candidate.id) {
            population.push(candidate.clone());
        }
        let mut next = self.next_species;
        let mut species = speciate(&population, &self.species, &ctx.speciation, &mut next);
        rebase_representatives(&mut species, &population);
        let sizes = species_sizes(&species, population.len());
        let behaviors: Vec<&[f64]> = population.iter().map(|e| e.behavior.as_slice()).collect();
        let context = PreferenceContext {
            population: &population,
            species_sizes: &sizes,
            behaviors: &behaviors,
            archive: &ctx.archive,
            coefficients: &ctx.speciation.coefficients,
        };
        let at = |id: u64| population.iter().position(|e| e.id == id).expect("present");
        Ok((context.score(ctx.criterion, at(candidate.id))?, context.score(ctx.criterion, at(incumbent.id))?))
    }

    /// Offers `candidate` to archive `k`. Returns whether it entered.
    fn offer(&mut self, ctx: &SearchContext, k: ObjectiveId, candidate: &Evaluated) -> Result<bool> {
        let h = heuristic(candidate.fitness[k]);
        let limit = self.params.archive_size;
        let archive = &self.archives[k];
        if archive.members.iter().any(|m| m.individual.id == candidate.id) {
            return Ok(false);
        }
        self.stats[k].updates += 1;
        let previous_best = archive.members.first().map(|m| m.h);
        if h == 1.0 {
            // Reached without passing the robustness check: always kept,
            // newest first, pushing out the worst (oldest) member if full.
            self.archives[k].members.insert(0, ArchiveMember { individual: candidate.clone(), h });
            self.archives[k].members.truncate(limit);
        } else if archive.members.len() < limit {
            self.insert(k, candidate, h);
        } else {
            let worst = archive.members.last().expect("full archive").clone();
            self.stats[k].comparisons += 1;
            let accept = if h == worst.h {
                self.stats[k].ties += 1;
                let (c, w) = self.secondary_pair(ctx, candidate, &worst.individual)?;
                if c != w {
                    self.stats[k].secondary_decided += 1;
                }
                is_better_than_worst(candidate.fitness[k], c, worst.individual.fitness[k], w)
            } else {
                h > worst.h
            };
            if !accept {
                return Ok(false);
            }
            self.archives[k].members.pop();
            self.insert(k, candidate, h);
        }
        if previous_best.is_none_or(|b| h > b) {
            self.log.push(CounterEvent::Improved { objective: k });
            self.archives[k].counter = 0;
            self.log.push(CounterEvent::ResetOnImprovement { objective: k });
        }
        Ok(true)
    }

    fn insert(&mut self, k: ObjectiveId, candidate: &Evaluated, h: f64) {
        let members = &mut self.archives[k].members;
        let at = members.partition_point(|m| m.h >= h);
        members.insert(at, ArchiveMember { individual: candidate.clone(), h });
    }

    /// Archive update for a freshly evaluated mutant. `reachable` lists the
    /// objectives that were reachable and uncovered before its evaluation.
    pub fn archive_update(&mut self, ctx: &mut SearchContext, mutant: &Evaluated, reachable: &[ObjectiveId]) -> Result<()> {
        if reachable.iter().any(|&k| mutant.fitness[k] == 0.0) {
            self.round.push(mutant.clone());
        }
        let mut unlocked = Vec::new();
        for &k in reachable {
            if ctx.is_covered(k) {
                self.archives[k].members.clear();
                unlocked.push(k);
            } else {
                // Either not reached, or reached without passing the
                // robustness check: keep it as an ordinary candidate.
                self.offer(ctx, k, mutant)?;
            }
        }
        // Objectives covered alongside their parent unlock their own children.
        while let Some(k) = unlocked.pop() {
            for &c in ctx.objectives.children(k) {
                if ctx.is_covered(c) {
                    if !self.archives[c].members.is_empty() || !reachable.contains(&c) {
                        self.archives[c].members.clear();
                        unlocked.push(c);
                    }
                    continue;
                }
                self.archives[c].counter = 0;
                self.log.push(CounterEvent::ResetOnUnlock { objective: c });
                let seeds: Vec<Evaluated> = self.round.clone();
                for g in seeds.iter().chain(std::iter::once(mutant)) {
                    self.offer(ctx, c, g)?;
                }
            }
        }
        Ok(())
    }

    /// Runs one mutation ladder from `start`. Returns the number of mutants.
    pub fn ladder(&mut self, ctx: &mut SearchContext, start: Genome, target: ObjectiveId, sampled: Option<f64>) -> Result<usize> {
        self.round.clear();
        let structural = ctx.rng.random::<f64>() < self.params.structural_probability;
        let mut base = start;
        let mut base_fitness = sampled.unwrap_or(f64::INFINITY);
        let mut produced = 0;
        for i in 0..self.params.mutations {
            if ctx.exhausted() {
                break;
            }
            let structural_step = structural && i == 0;
            let mutant = if structural_step {
                let grown = mutate_structure(&base, &mut ctx.registry, &mut ctx.rng);
                ctx.mutate(&grown, false)
            } else {
                ctx.mutate(&base, false)
            };
            let reachable = ctx.reachable_uncovered();
            let Some(evaluated) = ctx.evaluate(mutant)? else { break };
            produced += 1;
            self.archive_update(ctx, &evaluated, &reachable)?;
            let f = evaluated.fitness[target];
            if structural_step || f < base_fitness {
                base_fitness = f;
                base = evaluated.genome;
            }
            if sampled.is_some() && ctx.is_covered(target) {
                break;
            }
        }
        Ok(produced)
    }
}

impl Search for Mio {
    fn step(&mut self, ctx: &mut SearchContext) -> Result<()> {
        self.ensure_archives(ctx.objectives.len());
        self.update_parameters(ctx.budget_fraction());
        match self.select_source(ctx) {
            None => {}
            Some(Source::GenerateNew(target)) => {
                let genome = ctx.random_genome();
                self.ladder(ctx, genome, target, None)?;
            }
            Some(Source::Sample(target, genomes)) => {
                for g in genomes {
                    if ctx.exhausted() || ctx.is_covered(target) {
                        break;
                    }
                    let f = g.fitness[target];
                    self.ladder(ctx, g.genome, target, Some(f))?;
                }
            }
        }
        if ctx.criterion == SecondaryCriterion::Novelty {
            // Archive behaviours of the current archive champions.
            let champions: Vec<Vec<f64>> = self.archives.iter().filter_map(|a| a.members.first()).map(|m| m.individual.behavior.clone()).collect();
            if let Some(b) = champions.choose(&mut ctx.rng) {
                ctx.archive.maybe_record(b, &mut ctx.rng);
            }
        }
        Ok(())
    }
}
