use super::objectives::{ObjectiveId, ObjectiveSet};
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::vm::Game;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent seed streams derived from one master seed.
pub const SEARCH_STREAM: u64 = 0;
pub const ROBUSTNESS_STREAM: u64 = 1;
pub const REPLAY_STREAM: u64 = 2;

/// Endless supply of episode seeds. Streams with different ids draw from
/// disjoint keystreams.
#[derive(Clone, Debug)]
pub struct SeedStream {
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(master: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(stream);
        SeedStream { rng }
    }

    pub fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn take(&mut self, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.next_seed()).collect()
    }
}

/// For each of `objectives`, whether `genome` covers it in every episode
/// seeded from `seeds`.
pub fn robust_coverage(
    game: &Game,
    objectives: &ObjectiveSet,
    genome: &Genome,
    candidates: &[ObjectiveId],
    seeds: &[u64],
) -> Result<Vec<bool>> {
    if seeds.is_empty() {
        return Err(Error::contract("a robustness check needs at least one execution"));
    }
    let mut pass = vec![true; candidates.len()];
    for &seed in seeds {
        let trace = game.run_episode(genome, seed)?;
        for (ok, &id) in pass.iter_mut().zip(candidates) {
            *ok = *ok && objectives.get(id)?.covered_by(&trace);
        }
        if pass.iter().all(|ok| !ok) {
            break;
        }
    }
    Ok(pass)
}

/// Whether `genome` covers `objective` under `executions` fresh seeds.
pub fn robustness_check(
    game: &Game,
    objectives: &ObjectiveSet,
    genome: &Genome,
    objective: ObjectiveId,
    executions: usize,
    seeds: &mut SeedStream,
) -> Result<bool> {
    let seeds = seeds.take(executions);
    Ok(robust_coverage(game, objectives, genome, &[objective], &seeds)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::{catcher, Predicate, Stmt, Trigger};

    fn constant(game: &Game, action: usize) -> Genome {
        crate::testutil::constant_policy(game.feature_count(), game.action_count(), action)
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = SeedStream::new(7, SEARCH_STREAM).take(5);
        assert_eq!(a, SeedStream::new(7, SEARCH_STREAM).take(5));
        assert_ne!(a, SeedStream::new(7, ROBUSTNESS_STREAM).take(5));
        assert_ne!(a, SeedStream::new(8, SEARCH_STREAM).take(5));
    }

    #[test]
    fn start_statements_always_pass() {
        let game = Game::new(catcher()).unwrap();
        let set = ObjectiveSet::new(game.spec());
        let start = game.spec().scripts.iter().find(|s| s.trigger == Trigger::OnStart).unwrap();
        let objective = set.statement(start.body[0].id()).unwrap();
        let mut seeds = SeedStream::new(1, ROBUSTNESS_STREAM);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let g = Genome::minimal(game.feature_count(), game.action_count(), &mut rng).unwrap();
            assert!(robustness_check(&game, &set, &g, objective, 10, &mut seeds).unwrap());
        }
    }

    #[test]
    fn single_execution_equals_a_rerun() {
        let game = Game::new(catcher()).unwrap();
        let set = ObjectiveSet::new(game.spec());
        let g = constant(&game, 0);
        for seed in 0..20 {
            let trace = game.run_episode(&g, seed).unwrap();
            for o in set.iter() {
                assert_eq!(robust_coverage(&game, &set, &g, &[o.id], &[seed]).unwrap()[0], o.covered_by(&trace));
            }
        }
    }

    #[test]
    fn input_blind_genome_fails_the_catch_branch() {
        let game = Game::new(catcher()).unwrap();
        let set = ObjectiveSet::new(game.spec());
        let catch = game
            .spec()
            .statements()
            .into_iter()
            .find_map(|s| match s {
                Stmt::If { id, predicate: Predicate::Touching { .. }, .. } => set.branch(crate::vm::BranchRef { statement: *id, outcome: true }),
                _ => None,
            })
            .unwrap();
        let g = constant(&game, 0);
        // Monte-Carlo: a motionless paddle catches something in some episodes
        // but far from all of them.
        let hits = (0..100u64).filter(|&s| set.get(catch).unwrap().covered_by(&game.run_episode(&g, s).unwrap())).count();
        assert!(hits > 0 && hits < 90, "hits = {hits}");
        let mut seeds = SeedStream::new(3, ROBUSTNESS_STREAM);
        let passes = (0..20).filter(|_| robustness_check(&game, &set, &g, catch, 10, &mut seeds).unwrap()).count();
        assert_eq!(passes, 0);
    }

    #[test]
    fn zero_executions_is_a_contract_error() {
        let game = Game::new(catcher()).unwrap();
        let set = ObjectiveSet::new(game.spec());
        let g = constant(&game, 0);
        assert!(robust_coverage(&game, &set, &g, &[0], &[]).is_err());
    }
}
