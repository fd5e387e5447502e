use std::fs;
use std::process::{Command, Output};

fn neatmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neatmo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_the_builtin_games() {
    let o = neatmo(&["list-games"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["coin_maze", "catcher", "dodger"] {
        assert!(text.contains(id), "{text}");
    }
}

#[test]
fn usage_errors_exit_with_2() {
    for args in [
        vec!["run", "--game", "pong"],
        vec!["run", "--algorithm", "nsga"],
        vec!["run", "--secondary", "fastest"],
        vec!["run", "--budget-evals", "0"],
        vec!["run", "--robustness-executions", "0"],
        vec!["experiment", "--repetitions", "0", "--out", "/tmp/unused"],
        vec!["replay", "--suite", "x", "--executions", "0"],
        vec!["frobnicate"],
    ] {
        let o = neatmo(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn run_writes_series_suite_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = neatmo(&["run", "--algorithm", "mio", "--game", "catcher", "--budget-evals", "300", "--seed", "2", "--trace", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("mio on catcher:"));
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("evaluation,coveredStatements,coveredBranches\n"));
    assert!(fs::read_to_string(out.join("suite.txt")).unwrap().starts_with("suite v1 game=catcher\n"));
    let trace = fs::read_to_string(out.join("trace.txt")).unwrap();
    assert!(trace.lines().any(|l| l.starts_with("# ")));
    assert!(trace.lines().any(|l| l.starts_with("1: ")));
}

#[test]
fn replay_reports_every_stored_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(neatmo(&["run", "--algorithm", "mosa", "--game", "coin_maze", "--budget-evals", "200", "--seed", "1", "--out", out.to_str().unwrap()]).status.success());
    let suite = out.join("suite.txt");
    let o = neatmo(&["replay", "--suite", suite.to_str().unwrap(), "--game", "coin_maze", "--executions", "3"]);
    let text = stdout(&o);
    assert!(text.lines().last().unwrap().contains("objectives"), "{text}");
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let wrong_game = neatmo(&["replay", "--suite", suite.to_str().unwrap(), "--game", "dodger"]);
    assert_eq!(wrong_game.status.code(), Some(2));
}

#[test]
fn empty_suite_replays_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("empty.suite");
    fs::write(&suite, "suite v1 game=dodger\n").unwrap();
    let o = neatmo(&["replay", "--suite", suite.to_str().unwrap(), "--game", "dodger"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 objectives, all passed"));
}

#[test]
fn corrupted_suite_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("bad.suite");
    fs::write(&suite, "suite v1 game=dodger\nentry objective=s0 tick=zero eval=1 seeds=1\n").unwrap();
    let o = neatmo(&["replay", "--suite", suite.to_str().unwrap(), "--game", "dodger"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn failed_verification_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(neatmo(&["run", "--algorithm", "mio", "--game", "coin_maze", "--budget-evals", "100", "--seed", "4", "--out", out.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(out.join("suite.txt")).unwrap();
    // Relabel the first entry as the branch no network can take.
    let first = text.lines().find(|l| l.starts_with("entry objective=")).unwrap();
    let name = first.split_whitespace().nth(1).unwrap();
    let forged = text.replacen(name, "objective=b19:T", 1);
    let suite = dir.path().join("forged.suite");
    fs::write(&suite, forged).unwrap();
    let o = neatmo(&["replay", "--suite", suite.to_str().unwrap(), "--game", "coin_maze", "--executions", "2"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("b19:T 0/2"));
}

#[test]
fn custom_games_load_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maze.json");
    fs::write(&path, neatmo_core::vm::coin_maze().to_json().replace("\"coin_maze\"", "\"my_maze\"")).unwrap();
    let o = neatmo(&["run", "--game-file", path.to_str().unwrap(), "--budget-evals", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("mosa on my_maze:"));
    fs::write(&path, "{\"id\": \"broken\"}").unwrap();
    assert_eq!(neatmo(&["run", "--game-file", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn experiment_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let o = neatmo(&["experiment", "--algorithm", "mosa,neatest", "--game", "dodger", "--repetitions", "2", "--budget-evals", "120", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("game,algorithm,meanBranchCov,medianBranchCov,wins,a12,p\n"));
    for f in ["dodger_mosa.csv", "dodger_neatest.csv", "summary.csv", "comparison.csv", "suites/dodger_mosa_1.suite"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
}
