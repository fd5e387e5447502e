use super::machine::{Game, GameState, TickTrace};
use super::spec::StmtId;
use crate::error::Result;
use crate::genome::Genome;

/// Fractions of the episode at which the behaviour descriptor samples
/// the observation vector.
pub const BEHAVIOR_CHECKPOINTS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Aggregate of one episode: what executed, which outcomes were taken and
/// how close each `If` came to the outcome it did not take.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionTrace {
    pub ticks: u32,
    pub won: bool,
    /// Execution count per statement.
    pub hits: Vec<u32>,
    /// First tick each statement ran (start scripts run at tick 0).
    pub first_hit: Vec<Option<u32>>,
    /// First tick each outcome was taken, indexed `[false, true]`.
    pub first_taken: Vec<[Option<u32>; 2]>,
    /// Minimum branch distance per outcome over all evaluations;
    /// infinite when the predicate never ran.
    pub min_distance: Vec<[f64; 2]>,
    /// Observation vectors at [`BEHAVIOR_CHECKPOINTS`], concatenated.
    pub behavior: Vec<f64>,
    /// Executed statements per tick, when requested.
    pub tick_log: Option<Vec<Vec<StmtId>>>,
}

impl ExecutionTrace {
    fn new(statements: usize, log: bool) -> Self {
        ExecutionTrace {
            ticks: 0,
            won: false,
            hits: vec![0; statements],
            first_hit: vec![None; statements],
            first_taken: vec![[None; 2]; statements],
            min_distance: vec![[f64::INFINITY; 2]; statements],
            behavior: Vec::new(),
            tick_log: log.then(Vec::new),
        }
    }

    fn absorb(&mut self, tick: u32, fragment: TickTrace) {
        for &id in &fragment.executed {
            self.hits[id] += 1;
            self.first_hit[id].get_or_insert(tick);
        }
        for b in &fragment.branches {
            self.first_taken[b.statement][b.taken as usize].get_or_insert(tick);
            let d = &mut self.min_distance[b.statement];
            d[0] = d[0].min(b.distance_false);
            d[1] = d[1].min(b.distance_true);
        }
        if let Some(log) = &mut self.tick_log {
            log.push(fragment.executed);
        }
    }

    pub fn executed(&self, id: StmtId) -> bool {
        self.hits[id] > 0
    }

    pub fn taken(&self, id: StmtId, outcome: bool) -> bool {
        self.first_taken[id][outcome as usize].is_some()
    }

    pub fn distance(&self, id: StmtId, outcome: bool) -> f64 {
        self.min_distance[id][outcome as usize]
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EpisodeOptions {
    pub record_ticks: bool,
}

impl Game {
    /// Plays one episode with `genome` choosing an action every tick
    /// (argmax of the outputs, ties to the lowest index).
    pub fn run_episode(&self, genome: &Genome, seed: u64) -> Result<ExecutionTrace> {
        self.run_episode_with(genome, seed, EpisodeOptions::default())
    }

    pub fn run_episode_with(&self, genome: &Genome, seed: u64, options: EpisodeOptions) -> Result<ExecutionTrace> {
        self.check_arity(genome)?;
        let network = genome.network();
        self.play(seed, options, |features, values| {
            network.activate(features, values)?;
            Ok(network.argmax(values))
        })
    }

    /// Plays one episode with an arbitrary policy. `policy` receives the
    /// observation and a scratch buffer.
    pub fn play<P>(&self, seed: u64, options: EpisodeOptions, mut policy: P) -> Result<ExecutionTrace>
    where
        P: FnMut(&[f64], &mut Vec<f64>) -> Result<usize>,
    {
        let limit = self.spec().episode_ticks;
        let checkpoints: Vec<u32> =
            BEHAVIOR_CHECKPOINTS.iter().map(|q| ((q * limit as f64).ceil() as u32).clamp(1, limit)).collect();
        let mut trace = ExecutionTrace::new(self.statement_count(), options.record_ticks);
        let mut state = self.initial_state(seed);
        let start = self.start(&mut state);
        trace.absorb(0, start);

        let mut features = Vec::with_capacity(self.feature_count());
        let mut scratch = Vec::new();
        let mut next_checkpoint = 0;
        while !state.stopped {
            self.extract_features(&state, &mut features);
            let action = policy(&features, &mut scratch)?;
            let fragment = self.step_in_place(&mut state, action)?;
            trace.absorb(state.tick, fragment);
            while next_checkpoint < checkpoints.len() && state.tick >= checkpoints[next_checkpoint] {
                self.extract_features(&state, &mut features);
                trace.behavior.extend_from_slice(&features);
                next_checkpoint += 1;
            }
        }
        // Stopped early: the final observation stands in for later checkpoints.
        self.extract_features(&state, &mut features);
        for _ in next_checkpoint..checkpoints.len() {
            trace.behavior.extend_from_slice(&features);
        }
        trace.ticks = state.tick;
        trace.won = state.won;
        Ok(trace)
    }
}

/// Final state of an episode, for tests and debugging.
pub fn final_state<P>(game: &Game, seed: u64, mut policy: P) -> Result<GameState>
where
    P: FnMut(&GameState) -> usize,
{
    let mut state = game.initial_state(seed);
    game.start(&mut state);
    while !state.stopped {
        let a = policy(&state);
        game.step_in_place(&mut state, a)?;
    }
    Ok(state)
}
