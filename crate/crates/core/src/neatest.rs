//! Single-target baseline: evolve a NEAT population against one objective
//! at a time and move on when the target is covered or progress stalls.

use crate::error::{Error, Result};
use crate::fitness::ObjectiveId;
use crate::genome::{crossover, rebase_representatives, speciate, Fitter, Genome, Species, SpeciesId};
use crate::search::{Evaluated, Search, SearchContext, SearchEvent};
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct NeatestConfig {
    pub population_size: usize,
    pub stagnation_generations: u32,
    pub survival_threshold: f64,
    pub crossover_probability: f64,
    /// Species at least this large keep their champion unchanged.
    pub elitism_species_size: usize,
}

impl Default for NeatestConfig {
    fn default() -> Self {
        NeatestConfig {
            population_size: 150,
            stagnation_generations: 10,
            survival_threshold: 0.2,
            crossover_probability: 0.75,
            elitism_species_size: 5,
        }
    }
}

impl NeatestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.stagnation_generations < 1 {
            return Err(Error::Config("neatest needs a population of at least 2 and a stagnation limit of at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.survival_threshold) || !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(Error::Config("neatest survival threshold and crossover probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Splits `total` slots proportionally to `shares` (largest remainder,
/// ties to the lower index). Equal split when every share is zero.
pub fn allocate(shares: &[f64], total: usize) -> Vec<usize> {
    if shares.is_empty() {
        return Vec::new();
    }
    let sum: f64 = shares.iter().sum();
    let exact: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        shares.iter().map(|s| s / sum * total as f64).collect()
    } else {
        vec![total as f64 / shares.len() as f64; shares.len()]
    };
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut missing = total - out.iter().sum::<usize>();
    for i in order.into_iter().cycle() {
        if missing == 0 {
            break;
        }
        out[i] += 1;
        missing -= 1;
    }
    out
}

/// One period spent on a single target.
#[derive(Clone, Debug, PartialEq)]
pub struct Stint {
    pub target: ObjectiveId,
    /// Best fitness on the target when the stint began.
    pub initial_best: f64,
    /// Population best after each generation of the stint.
    pub bests: Vec<f64>,
    pub abandoned: bool,
}

pub struct Neatest {
    config: NeatestConfig,
    stints: Vec<Stint>,
    population: Vec<Evaluated>,
    species: Vec<Species>,
    next_species: SpeciesId,
    target: Option<ObjectiveId>,
    attempts: Vec<u32>,
    stint_best: f64,
    stagnant: u32,
    generation: u64,
    abandoned: Option<ObjectiveId>,
}

impl Neatest {
    pub fn new(config: NeatestConfig) -> Self {
        Neatest {
            config,
            stints: Vec::new(),
            population: Vec::new(),
            species: Vec::new(),
            next_species: 0,
            target: None,
            attempts: Vec::new(),
            stint_best: f64::INFINITY,
            stagnant: 0,
            generation: 0,
            abandoned: None,
        }
    }

    pub fn target(&self) -> Option<ObjectiveId> {
        self.target
    }

    pub fn population(&self) -> &[Evaluated] {
        &self.population
    }

    pub fn stints(&self) -> &[Stint] {
        &self.stints
    }

    /// Next target: lowest best-observed fitness, then fewest attempts,
    /// then shallowest, then random. The target just abandoned is skipped
    /// unless nothing else is left.
    pub fn select_target(&mut self, ctx: &mut SearchContext) -> Option<ObjectiveId> {
        if self.attempts.len() != ctx.objectives.len() {
            self.attempts = vec![0; ctx.objectives.len()];
        }
        let reachable = ctx.reachable_uncovered();
        let candidates: Vec<ObjectiveId> = match reachable.iter().copied().filter(|&k| Some(k) != self.abandoned).collect::<Vec<_>>() {
            v if v.is_empty() => reachable,
            v => v,
        };
        let key = |k: ObjectiveId| (ctx.best_observed(k), self.attempts[k], ctx.objectives.depth(k));
        let best = candidates.iter().map(|&k| key(k)).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))?;
        let tied: Vec<ObjectiveId> = candidates.into_iter().filter(|&k| key(k) == best).collect();
        let chosen = *tied.choose(&mut ctx.rng).expect("non-empty");
        self.attempts[chosen] += 1;
        Some(chosen)
    }

    fn start_stint(&mut self, ctx: &mut SearchContext) {
        self.target = self.select_target(ctx);
        self.stagnant = 0;
        if let Some(k) = self.target {
            self.stint_best = self.population.iter().map(|e| e.fitness[k]).fold(f64::INFINITY, f64::min);
            self.stints.push(Stint { target: k, initial_best: self.stint_best, bests: Vec::new(), abandoned: false });
            ctx.log(SearchEvent::TargetSelected { evaluation: ctx.evaluations(), generation: self.generation, objective: k });
        }
    }

    /// One NEAT generation against objective `k`.
    fn generation(&mut self, ctx: &mut SearchContext, k: ObjectiveId) -> Result<()> {
        let mut species = speciate(&self.population, &self.species, &ctx.speciation, &mut self.next_species);
        rebase_representatives(&mut species, &self.population);
        let h = |e: &Evaluated| 1.0 / (1.0 + e.fitness[k]);
        let shares: Vec<f64> = species.iter().map(|s| s.members.iter().map(|&i| h(&self.population[i])).sum::<f64>() / s.len() as f64).collect();
        let quotas = allocate(&shares, self.config.population_size);

        let mut elites: Vec<Evaluated> = Vec::new();
        let mut children: Vec<Genome> = Vec::new();
        for (s, &quota) in species.iter().zip(&quotas) {
            if quota == 0 {
                continue;
            }
            let mut ranked = s.members.clone();
            ranked.sort_by(|&a, &b| self.population[a].fitness[k].total_cmp(&self.population[b].fitness[k]).then(a.cmp(&b)));
            let mut quota = quota;
            if s.len() >= self.config.elitism_species_size {
                elites.push(self.population[ranked[0]].clone());
                quota -= 1;
            }
            let survivors = ((s.len() as f64 * self.config.survival_threshold).ceil() as usize).clamp(1, s.len());
            let parents = &ranked[..survivors];
            for _ in 0..quota {
                let p = *parents.choose(&mut ctx.rng).expect("non-empty");
                let child = if parents.len() > 1 && ctx.rng.random::<f64>() < self.config.crossover_probability {
                    let q = *parents.choose(&mut ctx.rng).expect("non-empty");
                    let (fp, fq) = (self.population[p].fitness[k], self.population[q].fitness[k]);
                    let fitter = if fp < fq {
                        Fitter::First
                    } else if fq < fp {
                        Fitter::Second
                    } else {
                        Fitter::Equal
                    };
                    crossover(&self.population[p].genome, &self.population[q].genome, fitter, &ctx.mutation, &mut ctx.rng)
                } else {
                    self.population[p].genome.clone()
                };
                children.push(ctx.mutate(&child, true));
            }
        }
        let evaluated = ctx.evaluate_all(children)?;
        elites.extend(evaluated);
        self.population = elites;
        self.species = species;
        self.generation += 1;
        Ok(())
    }
}

impl Search for Neatest {
    fn step(&mut self, ctx: &mut SearchContext) -> Result<()> {
        if self.population.is_empty() {
            let genomes = (0..self.config.population_size).map(|_| ctx.random_genome()).collect();
            self.population = ctx.evaluate_all(genomes)?;
            return Ok(());
        }
        if self.target.is_none_or(|k| ctx.is_covered(k)) {
            self.start_stint(ctx);
        }
        let Some(k) = self.target else { return Ok(()) };
        self.generation(ctx, k)?;
        let best = self.population.iter().map(|e| e.fitness[k]).fold(f64::INFINITY, f64::min);
        if let Some(stint) = self.stints.last_mut() {
            stint.bests.push(best);
        }
        if ctx.is_covered(k) {
            self.target = None;
            self.abandoned = None;
            return Ok(());
        }
        if best < self.stint_best {
            self.stint_best = best;
            self.stagnant = 0;
        } else {
            self.stagnant += 1;
        }
        if self.stagnant == self.config.stagnation_generations {
            ctx.log(SearchEvent::TargetAbandoned {
                evaluation: ctx.evaluations(),
                generation: self.generation,
                objective: k,
                stagnant_generations: self.stagnant,
            });
            self.abandoned = Some(k);
            self.target = None;
            if let Some(stint) = self.stints.last_mut() {
                stint.abandoned = true;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::RunConfig;
    use crate::vm::{coin_maze, Game};

    fn context(seed: u64, budget: u64) -> SearchContext {
        let config = RunConfig { seed, budget, ..Default::default() };
        SearchContext::new(Game::new(coin_maze()).unwrap(), &config)
    }

    #[test]
    fn allocation_sums_to_total() {
        assert_eq!(allocate(&[1.0, 1.0, 2.0], 8), vec![2, 2, 4]);
        assert_eq!(allocate(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(allocate(&[0.0, 0.0], 5), vec![3, 2]);
        assert_eq!(allocate(&[], 5), Vec::<usize>::new());
        for total in 0..40 {
            assert_eq!(allocate(&[0.3, 0.01, 5.0, 0.7], total).iter().sum::<usize>(), total);
        }
    }

    #[test]
    fn first_target_is_a_start_statement() {
        let mut ctx = context(1, 10_000);
        let mut neatest = Neatest::new(NeatestConfig::default());
        let k = neatest.select_target(&mut ctx).unwrap();
        assert_eq!(ctx.objectives.get(k).unwrap().parent, None);
    }

    #[test]
    fn near_miss_beats_untouched_deep_objectives() {
        let mut ctx = context(2, 10_000);
        let mut neatest = Neatest::new(NeatestConfig::default());
        neatest.step(&mut ctx).unwrap();
        let reachable = ctx.reachable_uncovered();
        let chosen = neatest.select_target(&mut ctx).unwrap();
        let best = reachable.iter().map(|&k| ctx.best_observed(k)).fold(f64::INFINITY, f64::min);
        assert_eq!(ctx.best_observed(chosen), best);
    }

    #[test]
    fn population_size_is_kept() {
        let mut ctx = context(3, 100_000);
        let mut neatest = Neatest::new(NeatestConfig { population_size: 40, ..Default::default() });
        for _ in 0..6 {
            neatest.step(&mut ctx).unwrap();
            assert_eq!(neatest.population.len(), 40);
        }
    }

    #[test]
    fn stagnation_abandons_after_exactly_the_limit() {
        let mut ctx = context(4, 200_000);
        let mut neatest = Neatest::new(NeatestConfig { population_size: 30, stagnation_generations: 3, ..Default::default() });
        let mut steps = 0;
        while !ctx.events().iter().any(|e| matches!(e, SearchEvent::TargetAbandoned { .. })) && steps < 2000 && !ctx.complete() {
            neatest.step(&mut ctx).unwrap();
            steps += 1;
        }
        let abandoned = ctx.events().iter().find_map(|e| match e {
            SearchEvent::TargetAbandoned { stagnant_generations, .. } => Some(*stagnant_generations),
            _ => None,
        });
        assert_eq!(abandoned, Some(3));
    }
}
