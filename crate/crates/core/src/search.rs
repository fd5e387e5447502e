//! Shared search machinery: configuration, the evaluation budget, coverage
//! bookkeeping and the run loop.

use crate::error::{Error, Result};
use crate::fitness::robustness::{ROBUSTNESS_STREAM, SEARCH_STREAM};
use crate::fitness::{update_suite_on_coverage, BehaviorArchive, DynamicTestSuite, ObjectiveId, ObjectiveSet, SeedStream};
use crate::genome::{mutate_add_connection, mutate_add_node, mutate_weights, Genome, InnovationRegistry, MutationConfig, SpeciationParams};
use crate::mio::{Mio, MioConfig};
use crate::mosa::{Mosa, MosaConfig};
use crate::neatest::{Neatest, NeatestConfig};
use crate::newsd::{Newsd, NewsdConfig};
use crate::preference::SecondaryCriterion;
use crate::vm::Game;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Neatest,
    Mosa,
    Mio,
    Newsd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Neatest, Algorithm::Mosa, Algorithm::Mio, Algorithm::Newsd];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Neatest => "neatest",
            Algorithm::Mosa => "mosa",
            Algorithm::Mio => "mio",
            Algorithm::Newsd => "newsd",
        }
    }

    pub fn is_many_objective(self) -> bool {
        self != Algorithm::Neatest
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.label() == s).ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub criterion: SecondaryCriterion,
    /// Fitness evaluations (episodes) the search may spend.
    pub budget: u64,
    pub robustness_executions: usize,
    pub seed: u64,
    pub mutation: MutationConfig,
    pub speciation: SpeciationParams,
    pub novelty_k: usize,
    pub novelty_add_probability: f64,
    pub mosa: MosaConfig,
    pub mio: MioConfig,
    pub newsd: NewsdConfig,
    pub neatest: NeatestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Mosa,
            criterion: SecondaryCriterion::Novelty,
            budget: 2000,
            robustness_executions: 10,
            seed: 0,
            mutation: MutationConfig::default(),
            speciation: SpeciationParams::default(),
            novelty_k: 15,
            novelty_add_probability: 0.1,
            mosa: MosaConfig::default(),
            mio: MioConfig::default(),
            newsd: NewsdConfig::default(),
            neatest: NeatestConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.budget < 1 {
            return fail("budget must be at least 1");
        }
        if self.robustness_executions < 1 {
            return fail("robustness executions must be at least 1");
        }
        if self.novelty_k < 1 || !(0.0..=1.0).contains(&self.novelty_add_probability) {
            return fail("novelty needs k >= 1 and an add probability in [0, 1]");
        }
        self.mosa.validate()?;
        self.mio.validate()?;
        self.newsd.validate()?;
        self.neatest.validate()
    }
}

/// A genome together with everything one episode revealed about it.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    pub id: u64,
    pub genome: Genome,
    /// Fitness on every objective of the game (lower is better).
    pub fitness: Vec<f64>,
    pub behavior: Vec<f64>,
}

impl AsRef<Genome> for Evaluated {
    fn as_ref(&self) -> &Genome {
        &self.genome
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoveragePoint {
    pub evaluation: u64,
    pub statements: usize,
    pub branches: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchEvent {
    Covered { evaluation: u64, objective: ObjectiveId },
    TargetSelected { evaluation: u64, generation: u64, objective: ObjectiveId },
    /// The single-target baseline gave up on a target.
    TargetAbandoned { evaluation: u64, generation: u64, objective: ObjectiveId, stagnant_generations: u32 },
}

/// State shared by all algorithms during one run.
pub struct SearchContext {
    pub game: Game,
    pub objectives: ObjectiveSet,
    pub suite: DynamicTestSuite,
    pub rng: ChaCha8Rng,
    pub registry: InnovationRegistry,
    pub mutation: MutationConfig,
    pub speciation: SpeciationParams,
    pub criterion: SecondaryCriterion,
    pub archive: BehaviorArchive,
    covered: Vec<bool>,
    episode_seeds: SeedStream,
    robustness_seeds: SeedStream,
    executions: usize,
    evaluations: u64,
    budget: u64,
    best: Vec<f64>,
    sole_improvements: Vec<u64>,
    series: Vec<CoveragePoint>,
    events: Vec<SearchEvent>,
    next_id: u64,
}

impl SearchContext {
    pub fn new(game: Game, config: &RunConfig) -> Self {
        let objectives = ObjectiveSet::new(game.spec());
        let n = objectives.len();
        let registry = InnovationRegistry::new(game.feature_count(), game.action_count());
        SearchContext {
            suite: DynamicTestSuite::new(game.id()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            registry,
            mutation: config.mutation.clone(),
            speciation: config.speciation,
            criterion: config.criterion,
            archive: BehaviorArchive::new(config.novelty_k, config.novelty_add_probability),
            covered: vec![false; n],
            episode_seeds: SeedStream::new(config.seed, SEARCH_STREAM),
            robustness_seeds: SeedStream::new(config.seed, ROBUSTNESS_STREAM),
            executions: config.robustness_executions,
            evaluations: 0,
            budget: config.budget,
            best: vec![f64::INFINITY; n],
            sole_improvements: vec![0; n],
            series: vec![CoveragePoint { evaluation: 0, statements: 0, branches: 0 }],
            events: Vec::new(),
            next_id: 0,
            game,
            objectives,
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.evaluations
    }

    pub fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    pub fn budget_fraction(&self) -> f64 {
        self.evaluations as f64 / self.budget as f64
    }

    pub fn covered(&self) -> &[bool] {
        &self.covered
    }

    pub fn is_covered(&self, id: ObjectiveId) -> bool {
        self.covered[id]
    }

    pub fn reachable_uncovered(&self) -> Vec<ObjectiveId> {
        self.objectives.reachable_uncovered(&self.covered)
    }

    /// No uncovered objective is reachable any more.
    pub fn complete(&self) -> bool {
        self.reachable_uncovered().is_empty()
    }

    /// Best fitness any evaluation has shown for an objective.
    pub fn best_observed(&self, id: ObjectiveId) -> f64 {
        self.best[id]
    }

    pub fn events(&self) -> &[SearchEvent] {
        &self.events
    }

    pub fn log(&mut self, event: SearchEvent) {
        self.events.push(event);
    }

    pub fn random_genome(&mut self) -> Genome {
        Genome::minimal(self.game.feature_count(), self.game.action_count(), &mut self.rng)
            .expect("games have at least one feature and action")
    }

    /// NEAT-style mutation: optional node and link additions, then a weight
    /// pass. Structural steps are skipped when `structural` is false.
    pub fn mutate(&mut self, genome: &Genome, structural: bool) -> Genome {
        let mut child = genome.clone();
        if structural {
            if self.rng.random::<f64>() < self.mutation.add_node_probability {
                child = mutate_add_node(&child, &mut self.registry, &mut self.rng);
            }
            if self.rng.random::<f64>() < self.mutation.add_connection_probability {
                child = mutate_add_connection(&child, &mut self.registry, &mut self.rng);
            }
        }
        mutate_weights(&child, &self.mutation, &mut self.rng)
    }

    /// Plays one episode, commits coverage and returns the evaluated
    /// genome, or `None` once the budget is spent.
    pub fn evaluate(&mut self, genome: Genome) -> Result<Option<Evaluated>> {
        Ok(self.evaluate_all(vec![genome])?.pop())
    }

    /// Evaluates genomes in order until the budget runs out. Episodes run
    /// in parallel; coverage is committed sequentially in input order.
    pub fn evaluate_all(&mut self, mut genomes: Vec<Genome>) -> Result<Vec<Evaluated>> {
        genomes.truncate(self.remaining() as usize);
        let seeds = self.episode_seeds.take(genomes.len());
        let game = &self.game;
        let traces = genomes
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(g, &seed)| game.run_episode(g, seed))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(genomes.len());
        for (genome, trace) in genomes.into_iter().zip(traces) {
            self.evaluations += 1;
            let fitness = self.objectives.fitness_vector(&trace);

            let mut improved = None;
            let mut improvements = 0;
            for id in self.objectives.reachable_uncovered(&self.covered) {
                if fitness[id] < self.best[id] {
                    improved = Some(id);
                    improvements += 1;
                }
            }
            if improvements == 1 {
                self.sole_improvements[improved.unwrap()] += 1;
            }
            for (b, f) in self.best.iter_mut().zip(&fitness) {
                *b = b.min(*f);
            }

            let newly = update_suite_on_coverage(
                &mut self.suite,
                &mut self.covered,
                &self.objectives,
                &self.game,
                &genome,
                &trace,
                self.executions,
                &mut self.robustness_seeds,
                self.evaluations,
            )?;
            if !newly.is_empty() {
                for &objective in &newly {
                    self.events.push(SearchEvent::Covered { evaluation: self.evaluations, objective });
                }
                self.series.push(self.coverage_point());
            }
            let id = self.next_id;
            self.next_id += 1;
            out.push(Evaluated { id, genome, fitness, behavior: trace.behavior });
        }
        Ok(out)
    }

    fn coverage_point(&self) -> CoveragePoint {
        let (mut statements, mut branches) = (0, 0);
        for o in self.objectives.iter().filter(|o| self.covered[o.id]) {
            if o.is_branch() {
                branches += 1;
            } else {
                statements += 1;
            }
        }
        CoveragePoint { evaluation: self.evaluations, statements, branches }
    }

    pub fn finish(mut self, algorithm: Algorithm) -> RunOutcome {
        let last = self.coverage_point();
        if self.series.last().map(|p| p.evaluation) != Some(last.evaluation) {
            self.series.push(last);
        }
        RunOutcome {
            algorithm,
            wins: self.suite.wins(self.game.spec()),
            evaluations: self.evaluations,
            statements: self.objectives.statement_count(),
            branches: self.objectives.branch_count(),
            series: self.series,
            sole_improvements: self.sole_improvements,
            events: self.events,
            suite: self.suite,
            objectives: self.objectives,
            game: self.game,
        }
    }
}

/// Everything a finished run reports.
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub game: Game,
    pub objectives: ObjectiveSet,
    pub suite: DynamicTestSuite,
    /// Coverage after the first evaluation, every change, and the end.
    pub series: Vec<CoveragePoint>,
    pub evaluations: u64,
    pub statements: usize,
    pub branches: usize,
    pub wins: bool,
    /// Per objective, evaluations in which it was the only reachable
    /// uncovered objective whose best observed fitness improved.
    pub sole_improvements: Vec<u64>,
    pub events: Vec<SearchEvent>,
}

impl RunOutcome {
    pub fn final_coverage(&self) -> CoveragePoint {
        *self.series.last().expect("series is never empty")
    }

    pub fn branch_coverage(&self) -> f64 {
        self.final_coverage().branches as f64 / self.branches.max(1) as f64
    }

    /// First evaluation index at which at least `branches` branches were
    /// covered.
    pub fn evaluations_to_reach(&self, branches: usize) -> Option<u64> {
        self.series.iter().find(|p| p.branches >= branches).map(|p| p.evaluation)
    }
}

/// One search strategy; `step` spends at least one evaluation unless the
/// budget is exhausted or nothing is left to cover.
pub trait Search {
    fn step(&mut self, ctx: &mut SearchContext) -> Result<()>;
}

/// Runs `config.algorithm` on `game` until the budget is spent or every
/// reachable objective is covered.
pub fn run(game: Game, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut ctx = SearchContext::new(game, config);
    match config.algorithm {
        Algorithm::Mosa => drive(&mut Mosa::new(config.mosa.clone()), &mut ctx)?,
        Algorithm::Mio => drive(&mut Mio::new(config.mio.clone()), &mut ctx)?,
        Algorithm::Newsd => drive(&mut Newsd::new(config.newsd.clone()), &mut ctx)?,
        Algorithm::Neatest => drive(&mut Neatest::new(config.neatest.clone()), &mut ctx)?,
    }
    Ok(ctx.finish(config.algorithm))
}

pub fn drive<S: Search>(search: &mut S, ctx: &mut SearchContext) -> Result<()> {
    let mut idle = 0;
    while !ctx.exhausted() && !ctx.complete() {
        let before = ctx.evaluations();
        search.step(ctx)?;
        idle = if ctx.evaluations() == before { idle + 1 } else { 0 };
        if idle > 100 {
            return Err(Error::contract("search made no progress in 100 consecutive steps"));
        }
    }
    Ok(())
}
