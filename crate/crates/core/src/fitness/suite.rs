//! Archive of robust covering networks.
//!
//! Text form:
//!
//! ```text
//! suite v1 game=<id>
//! entry objective=<name> tick=<t> eval=<i> seeds=<s1,s2,...>
//! genome ...
//! end
//! ```

use super::objectives::{ObjectiveId, ObjectiveSet};
use super::robustness::{robust_coverage, SeedStream};
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::vm::{ExecutionTrace, Game, GameSpec};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteEntry {
    pub genome: Genome,
    /// Seeds the covering run was verified under.
    pub seeds: Vec<u64>,
    /// First tick the objective was reached in the covering trace.
    pub tick: u32,
    /// Evaluation index that produced the genome.
    pub evaluation: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicTestSuite {
    game: String,
    entries: BTreeMap<String, SuiteEntry>,
}

impl DynamicTestSuite {
    pub fn new(game: impl Into<String>) -> Self {
        DynamicTestSuite { game: game.into(), entries: BTreeMap::new() }
    }

    pub fn game(&self) -> &str {
        &self.game
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, objective: &str) -> bool {
        self.entries.contains_key(objective)
    }

    pub fn get(&self, objective: &str) -> Option<&SuiteEntry> {
        self.entries.get(objective)
    }

    /// Entries ordered by objective name.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &SuiteEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn insert(&mut self, objective: impl Into<String>, entry: SuiteEntry) {
        self.entries.insert(objective.into(), entry);
    }

    /// Whether any winning statement of `spec` is covered.
    pub fn wins(&self, spec: &GameSpec) -> bool {
        spec.winning_statements.iter().any(|s| self.contains(&format!("s{s}")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("suite v1 game={}\n", self.game);
        for (name, e) in &self.entries {
            let seeds: Vec<String> = e.seeds.iter().map(u64::to_string).collect();
            writeln!(out, "entry objective={name} tick={} eval={} seeds={}", e.tick, e.evaluation, seeds.join(",")).unwrap();
            out.push_str(&e.genome.to_record());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        let (line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty suite file"))?;
        let game = header
            .strip_prefix("suite v1 game=")
            .filter(|g| !g.is_empty() && !g.contains(char::is_whitespace))
            .ok_or_else(|| Error::parse(line, format!("expected `suite v1 game=<id>`, found `{header}`")))?;
        let mut suite = DynamicTestSuite::new(game);
        while let Some((line, text)) = lines.next() {
            let (name, tick, evaluation, seeds) = parse_entry(line, text)?;
            if suite.contains(&name) {
                return Err(Error::parse(line, format!("duplicate entry for objective {name}")));
            }
            let genome = Genome::parse_record(&mut lines)
                .map_err(|e| retag(e, |m| format!("entry {name}: {m}")))?;
            suite.insert(name, SuiteEntry { genome, seeds, tick, evaluation });
        }
        Ok(suite)
    }
}

fn retag(error: Error, f: impl FnOnce(&str) -> String) -> Error {
    match error {
        Error::Parse { line, message } => Error::Parse { line, message: f(&message) },
        other => other,
    }
}

fn parse_entry(line: usize, text: &str) -> Result<(String, u32, u64, Vec<u64>)> {
    let bad = |what: &str| Error::parse(line, format!("entry record: bad {what} in `{text}`"));
    let mut fields = text.split_whitespace();
    if fields.next() != Some("entry") {
        return Err(Error::parse(line, format!("expected `entry`, found `{text}`")));
    }
    let mut field = |key: &str| {
        fields
            .next()
            .and_then(|f| f.strip_prefix(key))
            .and_then(|f| f.strip_prefix('='))
            .ok_or_else(|| bad(key))
    };
    let name = field("objective")?.to_string();
    let tick = field("tick")?.parse().map_err(|_| bad("tick"))?;
    let evaluation = field("eval")?.parse().map_err(|_| bad("eval"))?;
    let seeds = field("seeds")?;
    let seeds = if seeds.is_empty() {
        Vec::new()
    } else {
        seeds.split(',').map(|s| s.parse().map_err(|_| bad("seeds"))).collect::<Result<_>>()?
    };
    Ok((name, tick, evaluation, seeds))
}

/// Commits the objectives newly reached by `trace` to the suite.
///
/// Candidates are uncovered objectives the trace reaches whose parent is
/// covered or itself a candidate. All of them share one robustness batch of
/// `executions` fresh seeds; a candidate is committed when it passes and
/// its parent is (now) covered. Returns the newly covered ids in order.
#[allow(clippy::too_many_arguments)]
pub fn update_suite_on_coverage(
    suite: &mut DynamicTestSuite,
    covered: &mut [bool],
    objectives: &ObjectiveSet,
    game: &Game,
    genome: &Genome,
    trace: &ExecutionTrace,
    executions: usize,
    seeds: &mut SeedStream,
    evaluation: u64,
) -> Result<Vec<ObjectiveId>> {
    let mut candidate = vec![false; objectives.len()];
    let mut candidates = Vec::new();
    for o in objectives.iter() {
        if !covered[o.id] && o.covered_by(trace) && o.parent.is_none_or(|p| covered[p] || candidate[p]) {
            candidate[o.id] = true;
            candidates.push(o.id);
        }
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let batch = seeds.take(executions);
    let pass = robust_coverage(game, objectives, genome, &candidates, &batch)?;
    let mut newly = Vec::new();
    for (&id, ok) in candidates.iter().zip(pass) {
        let o = objectives.get(id)?;
        if ok && o.parent.is_none_or(|p| covered[p]) {
            covered[id] = true;
            suite.insert(
                o.name(),
                SuiteEntry {
                    genome: genome.clone(),
                    seeds: batch.clone(),
                    tick: o.first_tick(trace).unwrap_or(0),
                    evaluation,
                },
            );
            newly.push(id);
        }
    }
    Ok(newly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::robustness::ROBUSTNESS_STREAM;
    use crate::testutil::constant_policy;
    use crate::vm::coin_maze;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_suite() -> DynamicTestSuite {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut suite = DynamicTestSuite::new("coin_maze");
        for (i, name) in ["s0", "b3:T", "s12"].iter().enumerate() {
            let genome = Genome::minimal(10, 5, &mut rng).unwrap();
            suite.insert(*name, SuiteEntry { genome, seeds: vec![i as u64, u64::MAX], tick: 7 * i as u32, evaluation: 100 + i as u64 });
        }
        suite
    }

    #[test]
    fn text_round_trip() {
        let suite = sample_suite();
        assert_eq!(DynamicTestSuite::from_text(&suite.to_text()).unwrap(), suite);
        let empty = DynamicTestSuite::new("catcher");
        assert_eq!(DynamicTestSuite::from_text(&empty.to_text()).unwrap(), empty);
    }

    #[test]
    fn corrupted_weight_names_the_record() {
        let text = sample_suite().to_text();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let at = lines.iter().position(|l| l.starts_with("conn 4 ")).unwrap();
        let mut fields: Vec<String> = lines[at].split(' ').map(String::from).collect();
        fields[4] = "0xzz".into();
        lines[at] = fields.join(" ");
        match DynamicTestSuite::from_text(&lines.join("\n")) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, at + 1);
                assert!(message.contains("conn record 4"), "{message}");
                assert!(message.contains("weight"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_headers_and_entries() {
        assert!(DynamicTestSuite::from_text("").is_err());
        assert!(DynamicTestSuite::from_text("suite v2 game=x").is_err());
        let err = DynamicTestSuite::from_text("suite v1 game=x\nentry objective=s1 tick=a eval=1 seeds=1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn wins_looks_for_winning_statements() {
        let spec = coin_maze();
        let mut suite = DynamicTestSuite::new("coin_maze");
        assert!(!suite.wins(&spec));
        let genome = constant_policy(spec.feature_count(), spec.actions.len(), 0);
        suite.insert(format!("s{}", spec.winning_statements[0]), SuiteEntry { genome, seeds: vec![], tick: 0, evaluation: 0 });
        assert!(suite.wins(&spec));
    }

    #[test]
    fn coverage_update_commits_parents_and_children_together() {
        let game = Game::new(coin_maze()).unwrap();
        let set = ObjectiveSet::new(game.spec());
        let down = constant_policy(game.feature_count(), game.action_count(), 4);
        let trace = game.run_episode(&down, 1).unwrap();
        let mut suite = DynamicTestSuite::new(game.id());
        let mut covered = vec![false; set.len()];
        let mut seeds = SeedStream::new(0, ROBUSTNESS_STREAM);
        let newly = update_suite_on_coverage(&mut suite, &mut covered, &set, &game, &down, &trace, 10, &mut seeds, 1).unwrap();
        assert!(!newly.is_empty());
        assert_eq!(suite.len(), newly.len());
        for &id in &newly {
            let o = set.get(id).unwrap();
            assert!(o.parent.is_none_or(|p| covered[p]));
            assert!(o.covered_by(&trace));
        }
        // Nested objectives (coin pickup under `coin_taken == 0`) came in
        // with their parents.
        assert!(newly.iter().any(|&id| set.depth(id) > 2));

        // Nothing new the second time round.
        let again = update_suite_on_coverage(&mut suite, &mut covered, &set, &game, &down, &trace, 10, &mut seeds, 2).unwrap();
        assert!(again.is_empty());
    }

    #[test]
    fn stored_entries_replay() {
        let game = Game::new(coin_maze()).unwrap();
        let set = ObjectiveSet::new(game.spec());
        let down = constant_policy(game.feature_count(), game.action_count(), 4);
        let trace = game.run_episode(&down, 1).unwrap();
        let mut suite = DynamicTestSuite::new(game.id());
        let mut covered = vec![false; set.len()];
        let mut seeds = SeedStream::new(0, ROBUSTNESS_STREAM);
        update_suite_on_coverage(&mut suite, &mut covered, &set, &game, &down, &trace, 10, &mut seeds, 1).unwrap();
        let mut fresh = SeedStream::new(99, 7);
        for (name, entry) in suite.iter() {
            let id = set.find(name).unwrap();
            let batch = fresh.take(10);
            assert!(robust_coverage(&game, &set, &entry.genome, &[id], &batch).unwrap()[0], "{name}");
        }
    }
}
