//! Repeated runs, CSV reports, algorithm comparison and suite replay.

use crate::error::{Error, Result};
use crate::fitness::robustness::REPLAY_STREAM;
use crate::fitness::{DynamicTestSuite, ObjectiveSet, SeedStream};
use crate::search::{run, Algorithm, RunConfig, RunOutcome};
use crate::stats::{mann_whitney_u, mean, median, vargha_delaney_a12};
use crate::vm::{Game, GameSpec};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub games: Vec<GameSpec>,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    /// Template for every run; its seed is the master seed.
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.games.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Config("an experiment needs at least one game and one algorithm".into()));
        }
        self.run.validate()
    }
}

pub struct RunReport {
    pub repetition: usize,
    pub seed: u64,
    pub outcome: RunOutcome,
}

pub struct Experiment {
    pub config: ExperimentConfig,
    /// Ordered by game, then algorithm, then repetition.
    pub reports: Vec<RunReport>,
}

/// Seed of repetition `rep`.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    master.wrapping_add(rep as u64)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let games = config.games.iter().map(|g| Game::new(g.clone())).collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (g, _) in games.iter().enumerate() {
        for &algorithm in &config.algorithms {
            for rep in 0..config.repetitions {
                jobs.push((g, algorithm, rep));
            }
        }
    }
    let reports = jobs
        .into_par_iter()
        .map(|(g, algorithm, rep)| {
            let seed = repetition_seed(config.run.seed, rep);
            let run_config = RunConfig { algorithm, seed, ..config.run.clone() };
            let outcome = run(games[g].clone(), &run_config)?;
            Ok(RunReport { repetition: rep, seed, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment { config: config.clone(), reports })
}

impl Experiment {
    pub fn runs(&self, game: &str, algorithm: Algorithm) -> impl Iterator<Item = &RunReport> {
        let game = game.to_string();
        self.reports.iter().filter(move |r| r.outcome.game.id() == game && r.outcome.algorithm == algorithm)
    }

    pub fn final_branch_coverage(&self, game: &str, algorithm: Algorithm) -> Vec<f64> {
        self.runs(game, algorithm).map(|r| r.outcome.branch_coverage()).collect()
    }
}

/// Coverage series of every repetition of one (game, algorithm) pair.
pub fn series_csv(experiment: &Experiment, game: &str, algorithm: Algorithm) -> String {
    let mut out = String::from("repetition,evaluation,coveredStatements,coveredBranches\n");
    for r in experiment.runs(game, algorithm) {
        for p in &r.outcome.series {
            writeln!(out, "{},{},{},{}", r.repetition, p.evaluation, p.statements, p.branches).unwrap();
        }
    }
    out
}

pub fn summary_csv(experiment: &Experiment) -> String {
    let mut out = String::from(
        "game,algorithm,repetition,seed,evaluations,coveredStatements,totalStatements,coveredBranches,totalBranches,branchCoverage,wins\n",
    );
    for r in &experiment.reports {
        let o = &r.outcome;
        let last = o.final_coverage();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{}",
            o.game.id(),
            o.algorithm,
            r.repetition,
            r.seed,
            o.evaluations,
            last.statements,
            o.statements,
            last.branches,
            o.branches,
            o.branch_coverage(),
            o.wins
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub game: String,
    pub algorithm: Algorithm,
    pub mean_branch_coverage: f64,
    pub median_branch_coverage: f64,
    pub wins: usize,
    /// Effect size against the baseline.
    pub a12: f64,
    pub p: f64,
}

/// One row per game and algorithm, each compared with `baseline`.
pub fn compare_algorithms(experiment: &Experiment, baseline: Algorithm) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for spec in &experiment.config.games {
        let base = experiment.final_branch_coverage(&spec.id, baseline);
        for &algorithm in &experiment.config.algorithms {
            let xs = experiment.final_branch_coverage(&spec.id, algorithm);
            let test = mann_whitney_u(&xs, &base)?;
            rows.push(ComparisonRow {
                game: spec.id.clone(),
                algorithm,
                mean_branch_coverage: mean(&xs),
                median_branch_coverage: median(&xs),
                wins: experiment.runs(&spec.id, algorithm).filter(|r| r.outcome.wins).count(),
                a12: vargha_delaney_a12(&xs, &base)?,
                p: test.p,
            });
        }
    }
    Ok(rows)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("game,algorithm,meanBranchCov,medianBranchCov,wins,a12,p\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{},{:.6},{:.6}",
            r.game, r.algorithm, r.mean_branch_coverage, r.median_branch_coverage, r.wins, r.a12, r.p
        )
        .unwrap();
    }
    out
}

pub fn suite_file_name(game: &str, algorithm: Algorithm, repetition: usize) -> String {
    format!("{game}_{algorithm}_{repetition}.suite")
}

/// Writes the series, summary, comparison and suite files into `dir`.
/// The baseline is neatest when it took part, else the first algorithm.
pub fn write_reports(experiment: &Experiment, dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path, e: std::io::Error| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())));
    let suites = dir.join("suites");
    fs::create_dir_all(&suites).map_err(|e| io(&suites, e))?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, text: String| -> Result<()> {
        fs::write(&path, text).map_err(|e| io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for spec in &experiment.config.games {
        for &algorithm in &experiment.config.algorithms {
            put(dir.join(format!("{}_{algorithm}.csv", spec.id)), series_csv(experiment, &spec.id, algorithm))?;
        }
    }
    put(dir.join("summary.csv"), summary_csv(experiment))?;
    let baseline = if experiment.config.algorithms.contains(&Algorithm::Neatest) {
        Algorithm::Neatest
    } else {
        experiment.config.algorithms[0]
    };
    put(dir.join("comparison.csv"), comparison_csv(&compare_algorithms(experiment, baseline)?))?;
    for r in &experiment.reports {
        let name = suite_file_name(r.outcome.game.id(), r.outcome.algorithm, r.repetition);
        put(suites.join(name), r.outcome.suite.to_text())?;
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayRow {
    pub objective: String,
    pub successes: usize,
    pub executions: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplayReport {
    pub rows: Vec<ReplayRow>,
}

impl ReplayReport {
    /// Every objective re-covered in every execution.
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.successes == r.executions)
    }
}

/// Re-runs every stored network under `executions` seeds drawn from the
/// replay stream of `seed`.
pub fn replay_suite(suite: &DynamicTestSuite, game: &Game, executions: usize, seed: u64) -> Result<ReplayReport> {
    if suite.game() != game.id() {
        return Err(Error::Config(format!("suite was recorded on game {} but replay uses {}", suite.game(), game.id())));
    }
    let objectives = ObjectiveSet::new(game.spec());
    let mut seeds = SeedStream::new(seed, REPLAY_STREAM);
    let mut rows = Vec::new();
    for (name, entry) in suite.iter() {
        let id = objectives.find(name).ok_or_else(|| Error::Config(format!("suite objective {name} does not exist in game {}", game.id())))?;
        let objective = objectives.get(id)?;
        let mut successes = 0;
        for s in seeds.take(executions) {
            if objective.covered_by(&game.run_episode(&entry.genome, s)?) {
                successes += 1;
            }
        }
        rows.push(ReplayRow { objective: name.to_string(), successes, executions });
    }
    Ok(ReplayReport { rows })
}

pub fn replay_suite_file(path: &Path, game: &Game, executions: usize, seed: u64) -> Result<ReplayReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    replay_suite(&DynamicTestSuite::from_text(&text)?, game, executions, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::{catcher, coin_maze};

    fn small(algorithms: Vec<Algorithm>, repetitions: usize) -> ExperimentConfig {
        ExperimentConfig {
            games: vec![coin_maze()],
            algorithms,
            repetitions,
            run: RunConfig { budget: 120, seed: 3, ..Default::default() },
        }
    }

    #[test]
    fn repetitions_use_offset_seeds() {
        let e = run_experiment(&small(vec![Algorithm::Mio], 3)).unwrap();
        let seeds: Vec<u64> = e.reports.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![3, 4, 5]);
        for r in &e.reports {
            assert!(r.outcome.evaluations <= 120);
            assert!(r.outcome.series.windows(2).all(|w| w[0].branches <= w[1].branches));
        }
    }

    #[test]
    fn self_comparison_is_neutral() {
        let e = run_experiment(&small(vec![Algorithm::Mosa, Algorithm::Newsd], 2)).unwrap();
        let rows = compare_algorithms(&e, Algorithm::Mosa).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].a12, 0.5);
        assert_eq!(rows[0].p, 1.0);
        assert!(comparison_csv(&rows).starts_with("game,algorithm,meanBranchCov,medianBranchCov,wins,a12,p\n"));
    }

    #[test]
    fn empty_suite_replays_to_empty_report() {
        let game = Game::new(coin_maze()).unwrap();
        let report = replay_suite(&DynamicTestSuite::new("coin_maze"), &game, 10, 0).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.all_passed());
    }

    #[test]
    fn replay_rejects_other_games() {
        let game = Game::new(catcher()).unwrap();
        assert!(replay_suite(&DynamicTestSuite::new("coin_maze"), &game, 10, 0).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(small(vec![Algorithm::Mio], 0).validate().is_err());
        assert!(small(vec![], 1).validate().is_err());
    }
}
