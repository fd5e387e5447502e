use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use neatmo_core::experiment::{
    comparison_csv, compare_algorithms, replay_suite_file, run_experiment, write_reports, Experiment, ExperimentConfig,
};
use neatmo_core::fitness::ObjectiveSet;
use neatmo_core::search::run;
use neatmo_core::vm::{builtin_game, builtin_games, EpisodeOptions, Game, GameSpec};
use neatmo_core::{Algorithm, DynamicTestSuite, RunConfig, SecondaryCriterion};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "neatmo", version, about = "Many-objective neuroevolution test generation for mini games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and report its coverage.
    Run(RunArgs),
    /// Repeat searches for several algorithms and write comparison reports.
    Experiment(ExperimentArgs),
    /// Re-run a stored test suite under fresh seeds.
    Replay(ReplayArgs),
    /// List the built-in games.
    ListGames,
}

#[derive(Args)]
struct GameArgs {
    /// Built-in game id (see list-games).
    #[arg(long, default_value = "coin_maze", conflicts_with = "game_file")]
    game: String,
    /// Game spec in JSON form.
    #[arg(long)]
    game_file: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "novelty")]
    secondary: SecondaryCriterion,
    #[arg(long, default_value_t = 2000)]
    budget_evals: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    robustness_executions: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "mosa")]
    algorithm: Algorithm,
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Directory for the coverage series and the suite.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump the executed statements of every tick for each suite entry.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated algorithms, or `all`.
    #[arg(long, default_value = "all")]
    algorithm: String,
    /// Comma-separated built-in games, or `all`.
    #[arg(long, default_value = "coin_maze", conflicts_with = "game_file")]
    game: String,
    #[arg(long)]
    game_file: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 30)]
    repetitions: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 10)]
    executions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Errors reported with the usage exit status.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

fn load_game(args: &GameArgs) -> Result<GameSpec> {
    match &args.game_file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            GameSpec::from_json(&text).with_context(|| format!("loading {}", path.display()))
        }
        None => builtin_game(&args.game).ok_or_else(|| usage(format!("unknown game `{}`", args.game))),
    }
}

fn run_config(algorithm: Algorithm, search: &SearchArgs) -> Result<RunConfig> {
    let config = RunConfig {
        algorithm,
        criterion: search.secondary,
        budget: search.budget_evals,
        robustness_executions: search.robustness_executions,
        seed: search.seed,
        ..Default::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn parse_list<T, F>(text: &str, all: &[T], parse: F) -> Result<Vec<T>>
where
    T: Clone,
    F: Fn(&str) -> Result<T>,
{
    if text == "all" {
        return Ok(all.to_vec());
    }
    text.split(',').map(|s| parse(s.trim())).collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn trace_text(game: &Game, suite: &DynamicTestSuite) -> Result<String> {
    let mut out = String::new();
    for (name, entry) in suite.iter() {
        let seed = entry.seeds.first().copied().unwrap_or(0);
        let trace = game.run_episode_with(&entry.genome, seed, EpisodeOptions { record_ticks: true })?;
        writeln!(out, "# {name} seed={seed}")?;
        for (tick, ids) in trace.tick_log.unwrap_or_default().iter().enumerate() {
            let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{tick}: {}", ids.join(" "))?;
        }
    }
    Ok(out)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let spec = load_game(&args.game)?;
    let config = run_config(args.algorithm, &args.search)?;
    let game = Game::new(spec)?;
    let outcome = run(game, &config)?;
    let last = outcome.final_coverage();
    println!(
        "{} on {}: {} evaluations, statements {}/{}, branches {}/{} ({:.2}%), wins {}",
        outcome.algorithm,
        outcome.game.id(),
        outcome.evaluations,
        last.statements,
        outcome.statements,
        last.branches,
        outcome.branches,
        100.0 * outcome.branch_coverage(),
        outcome.wins
    );
    let trace = if args.trace { Some(trace_text(&outcome.game, &outcome.suite)?) } else { None };
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut series = String::from("evaluation,coveredStatements,coveredBranches\n");
            for p in &outcome.series {
                writeln!(series, "{},{},{}", p.evaluation, p.statements, p.branches)?;
            }
            write_file(&dir.join("series.csv"), &series)?;
            write_file(&dir.join("suite.txt"), &outcome.suite.to_text())?;
            if let Some(t) = &trace {
                write_file(&dir.join("trace.txt"), t)?;
            }
        }
        None => {
            if let Some(t) = &trace {
                eprint!("{t}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let algorithms = parse_list(&args.algorithm, &Algorithm::ALL, |s| s.parse::<Algorithm>().map_err(|e| usage(e.to_string())))?;
    let games = match &args.game_file {
        Some(path) => vec![load_game(&GameArgs { game: String::new(), game_file: Some(path.clone()) })?],
        None => parse_list(&args.game, &builtin_games(), |s| builtin_game(s).ok_or_else(|| usage(format!("unknown game `{s}`"))))?,
    };
    let run = run_config(algorithms[0], &args.search)?;
    let config = ExperimentConfig { games, algorithms, repetitions: args.repetitions, run };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let experiment = run_experiment(&config)?;
    write_reports(&experiment, &args.out)?;
    print_summary(&experiment)?;
    Ok(ExitCode::SUCCESS)
}

fn print_summary(experiment: &Experiment) -> Result<()> {
    let baseline = if experiment.config.algorithms.contains(&Algorithm::Neatest) {
        Algorithm::Neatest
    } else {
        experiment.config.algorithms[0]
    };
    print!("{}", comparison_csv(&compare_algorithms(experiment, baseline)?));
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode> {
    if args.executions < 1 {
        bail!(usage("--executions must be at least 1"));
    }
    let spec = load_game(&args.game)?;
    let game = Game::new(spec)?;
    let report = replay_suite_file(&args.suite, &game, args.executions, args.seed)
        .with_context(|| format!("replaying {}", args.suite.display()))?;
    for row in &report.rows {
        println!("{} {}/{}", row.objective, row.successes, row.executions);
    }
    println!("{} objectives, {}", report.rows.len(), if report.all_passed() { "all passed" } else { "FAILED" });
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn cmd_list_games() -> Result<ExitCode> {
    for spec in builtin_games() {
        let objectives = ObjectiveSet::new(&spec);
        println!(
            "{}: {} statements, {} branches, {} ticks, actions {}",
            spec.id,
            objectives.statement_count(),
            objectives.branch_count(),
            spec.episode_ticks,
            spec.actions.join("/")
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Replay(args) => cmd_replay(args),
        Command::ListGames => cmd_list_games(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.chain().any(|c| {
                c.is::<Usage>()
                    || matches!(
                        c.downcast_ref::<neatmo_core::Error>(),
                        Some(
                            neatmo_core::Error::UnknownGame(_)
                                | neatmo_core::Error::UnknownAlgorithm(_)
                                | neatmo_core::Error::UnknownCriterion(_)
                                | neatmo_core::Error::Config(_)
                        )
                    )
            });
            if is_usage {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
