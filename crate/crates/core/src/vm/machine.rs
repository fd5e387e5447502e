use super::spec::{Axis, CmpOp, Effect, GameSpec, Predicate, Stmt, StmtId, Trigger, Wall, STAGE_HEIGHT, STAGE_WIDTH};
use crate::error::{Error, Result};
use crate::genome::Genome;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distance added when a predicate needs to flip but offers no gradient.
pub const BRANCH_K: f64 = 1.0;
/// Keeps the false-branch touching distance positive at exact contact.
pub const TOUCH_EPSILON: f64 = 1e-6;

#[derive(Clone, Debug)]
enum Op {
    MoveBy(usize, f64, f64),
    GoTo(usize, f64, f64),
    GoToRandom(usize, [f64; 4]),
    SetVar(usize, f64),
    ChangeVar(usize, f64),
    Say,
    Win,
    Stop,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Cond {
    Touching(usize, usize),
    KeyDown(usize),
    Var(usize, CmpOp, f64),
    Pos(usize, Axis, CmpOp, f64),
}

#[derive(Clone, Debug)]
enum Node {
    Atomic(Op),
    If { cond: Cond, then_body: Vec<StmtId>, else_body: Vec<StmtId> },
}

/// A validated game with names resolved to indices, ready to execute.
#[derive(Clone, Debug)]
pub struct Game {
    spec: GameSpec,
    nodes: Vec<Node>,
    on_start: Vec<Vec<StmtId>>,
    every_tick: Vec<Vec<StmtId>>,
}

/// Runtime state of one game instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GameState {
    pub positions: Vec<(f64, f64)>,
    pub variables: Vec<f64>,
    pub tick: u32,
    pub stopped: bool,
    pub won: bool,
    pressed: Option<usize>,
    rng: ChaCha8Rng,
}

/// What one tick (or the start scripts) did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickTrace {
    pub executed: Vec<StmtId>,
    /// `(if statement, outcome taken, distance to true, distance to false)`.
    pub branches: Vec<BranchEval>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchEval {
    pub statement: StmtId,
    pub taken: bool,
    pub distance_true: f64,
    pub distance_false: f64,
}

impl Game {
    pub fn new(spec: GameSpec) -> Result<Game> {
        spec.validate()?;
        let sprite = |n: &str| spec.sprites.iter().position(|s| s.name == n).unwrap();
        let var = |n: &str| spec.variables.iter().position(|v| v.name == n).unwrap();
        let action = |n: &str| spec.actions.iter().position(|a| a == n).unwrap();
        let stmts = spec.statements();
        let mut nodes = vec![Node::Atomic(Op::Say); stmts.len()];
        for s in stmts {
            nodes[s.id()] = match s {
                Stmt::Atomic { effect, .. } => Node::Atomic(match effect {
                    Effect::MoveBy { sprite: s, dx, dy } => Op::MoveBy(sprite(s), *dx, *dy),
                    Effect::GoTo { sprite: s, x, y } => Op::GoTo(sprite(s), *x, *y),
                    Effect::GoToRandom { sprite: s, x_min, x_max, y_min, y_max } => {
                        Op::GoToRandom(sprite(s), [*x_min, *x_max, *y_min, *y_max])
                    }
                    Effect::SetVar { var: v, value } => Op::SetVar(var(v), *value),
                    Effect::ChangeVar { var: v, delta } => Op::ChangeVar(var(v), *delta),
                    Effect::Say { .. } => Op::Say,
                    Effect::Win => Op::Win,
                    Effect::Stop => Op::Stop,
                }),
                Stmt::If { predicate, then_body, else_body, .. } => Node::If {
                    cond: match predicate {
                        Predicate::Touching { a, b } => Cond::Touching(sprite(a), sprite(b)),
                        Predicate::KeyDown { action: a } => Cond::KeyDown(action(a)),
                        Predicate::VarCmp { var: v, op, value } => Cond::Var(var(v), *op, *value),
                        Predicate::PosCmp { sprite: s, axis, op, value } => Cond::Pos(sprite(s), *axis, *op, *value),
                    },
                    then_body: then_body.iter().map(Stmt::id).collect(),
                    else_body: else_body.iter().map(Stmt::id).collect(),
                },
            };
        }
        let bodies = |t: Trigger| {
            spec.scripts
                .iter()
                .filter(|s| s.trigger == t)
                .map(|s| s.body.iter().map(Stmt::id).collect())
                .collect()
        };
        let on_start = bodies(Trigger::OnStart);
        let every_tick = bodies(Trigger::EveryTick);
        Ok(Game { spec, nodes, on_start, every_tick })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn statement_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_if(&self, id: StmtId) -> bool {
        matches!(self.nodes.get(id), Some(Node::If { .. }))
    }

    pub fn feature_count(&self) -> usize {
        self.spec.feature_count()
    }

    pub fn action_count(&self) -> usize {
        self.spec.actions.len()
    }

    /// Fresh state: start positions jittered from `seed`, variables at their
    /// initial values. Start scripts have not run yet.
    pub fn initial_state(&self, seed: u64) -> GameState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = self
            .spec
            .sprites
            .iter()
            .map(|s| {
                let jx = if s.jitter[0] > 0.0 { rng.random_range(-s.jitter[0]..=s.jitter[0]) } else { 0.0 };
                let jy = if s.jitter[1] > 0.0 { rng.random_range(-s.jitter[1]..=s.jitter[1]) } else { 0.0 };
                clamp_to_stage(s.x + jx, s.y + jy)
            })
            .collect();
        GameState {
            positions,
            variables: self.spec.variables.iter().map(|v| v.initial).collect(),
            tick: 0,
            stopped: false,
            won: false,
            pressed: None,
            rng,
        }
    }

    /// Runs the start scripts on a fresh state.
    pub fn start(&self, state: &mut GameState) -> TickTrace {
        let mut trace = TickTrace::default();
        for body in &self.on_start {
            if state.stopped {
                break;
            }
            self.exec_body(body, state, &mut trace);
        }
        trace
    }

    /// Applies `action`, runs every per-tick script in order and advances
    /// the clock. The game stops once the episode length is reached.
    pub fn step_in_place(&self, state: &mut GameState, action: usize) -> Result<TickTrace> {
        if state.stopped {
            return Err(Error::contract("cannot step a stopped game"));
        }
        if action >= self.action_count() {
            return Err(Error::contract(format!("action {action} out of range")));
        }
        state.pressed = Some(action);
        let mut trace = TickTrace::default();
        for body in &self.every_tick {
            if state.stopped {
                break;
            }
            self.exec_body(body, state, &mut trace);
        }
        state.tick += 1;
        if state.tick >= self.spec.episode_ticks {
            state.stopped = true;
        }
        Ok(trace)
    }

    pub fn step(&self, state: &GameState, action: usize) -> Result<(GameState, TickTrace)> {
        let mut next = state.clone();
        let trace = self.step_in_place(&mut next, action)?;
        Ok((next, trace))
    }

    /// Executes a body; returns false once the game stopped mid-body.
    fn exec_body(&self, body: &[StmtId], state: &mut GameState, trace: &mut TickTrace) -> bool {
        for &id in body {
            trace.executed.push(id);
            match &self.nodes[id] {
                Node::Atomic(op) => {
                    self.apply(op, state);
                    if state.stopped {
                        return false;
                    }
                }
                Node::If { cond, then_body, else_body } => {
                    let taken = self.eval(*cond, state);
                    trace.branches.push(BranchEval {
                        statement: id,
                        taken,
                        distance_true: self.distance(*cond, state, true),
                        distance_false: self.distance(*cond, state, false),
                    });
                    let body = if taken { then_body } else { else_body };
                    if !self.exec_body(body, state, trace) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn apply(&self, op: &Op, state: &mut GameState) {
        match *op {
            Op::MoveBy(s, dx, dy) => {
                let r = self.spec.sprites[s].radius;
                let (mut x, mut y) = state.positions[s];
                if dx != 0.0 && !self.hits_wall(x + dx, y, r) {
                    x += dx;
                }
                if dy != 0.0 && !self.hits_wall(x, y + dy, r) {
                    y += dy;
                }
                state.positions[s] = clamp_to_stage(x, y);
            }
            Op::GoTo(s, x, y) => state.positions[s] = clamp_to_stage(x, y),
            Op::GoToRandom(s, [x0, x1, y0, y1]) => {
                let x = if x1 > x0 { state.rng.random_range(x0..=x1) } else { x0 };
                let y = if y1 > y0 { state.rng.random_range(y0..=y1) } else { y0 };
                state.positions[s] = clamp_to_stage(x, y);
            }
            Op::SetVar(v, value) => state.variables[v] = value,
            Op::ChangeVar(v, delta) => state.variables[v] += delta,
            Op::Say => {}
            Op::Win => {
                state.won = true;
                state.stopped = true;
            }
            Op::Stop => state.stopped = true,
        }
    }

    fn hits_wall(&self, x: f64, y: f64, r: f64) -> bool {
        self.spec.walls.iter().any(|w| circle_hits_rect(x, y, r, w))
    }

    fn centre_gap(&self, a: usize, b: usize, state: &GameState) -> (f64, f64) {
        let (ax, ay) = state.positions[a];
        let (bx, by) = state.positions[b];
        ((ax - bx).hypot(ay - by), self.spec.sprites[a].radius + self.spec.sprites[b].radius)
    }

    pub(crate) fn eval(&self, cond: Cond, state: &GameState) -> bool {
        match cond {
            Cond::Touching(a, b) => {
                let (d, r) = self.centre_gap(a, b, state);
                d <= r
            }
            Cond::KeyDown(a) => state.pressed == Some(a),
            Cond::Var(v, op, c) => op.holds(state.variables[v], c),
            Cond::Pos(s, axis, op, c) => op.holds(axis_value(state.positions[s], axis), c),
        }
    }

    /// Korel-style branch distance with `K = 1`; zero exactly when the
    /// predicate already evaluates to `desired`.
    pub(crate) fn distance(&self, cond: Cond, state: &GameState, desired: bool) -> f64 {
        if self.eval(cond, state) == desired {
            return 0.0;
        }
        match cond {
            Cond::Touching(a, b) => {
                let (d, r) = self.centre_gap(a, b, state);
                if desired {
                    (d - r).max(0.0)
                } else {
                    (r - d + TOUCH_EPSILON).max(0.0)
                }
            }
            Cond::KeyDown(_) => BRANCH_K,
            Cond::Var(v, op, c) => compare_distance(op, state.variables[v], c, desired),
            Cond::Pos(s, axis, op, c) => compare_distance(op, axis_value(state.positions[s], axis), c, desired),
        }
    }

    /// Branch distance of a spec-level predicate in `state`.
    pub fn branch_distance(&self, predicate: &Predicate, state: &GameState, desired: bool) -> Result<f64> {
        let cond = self.resolve(predicate)?;
        Ok(self.distance(cond, state, desired))
    }

    pub fn evaluate_predicate(&self, predicate: &Predicate, state: &GameState) -> Result<bool> {
        Ok(self.eval(self.resolve(predicate)?, state))
    }

    fn resolve(&self, predicate: &Predicate) -> Result<Cond> {
        let spec = &self.spec;
        let missing = |n: &str| Error::contract(format!("unknown name `{n}` in predicate"));
        let sprite = |n: &str| spec.sprites.iter().position(|s| s.name == n).ok_or_else(|| missing(n));
        let var = |n: &str| spec.variables.iter().position(|v| v.name == n).ok_or_else(|| missing(n));
        Ok(match predicate {
            Predicate::Touching { a, b } => Cond::Touching(sprite(a)?, sprite(b)?),
            Predicate::KeyDown { action } => {
                Cond::KeyDown(spec.actions.iter().position(|x| x == action).ok_or_else(|| missing(action))?)
            }
            Predicate::VarCmp { var: v, op, value } => Cond::Var(var(v)?, *op, *value),
            Predicate::PosCmp { sprite: s, axis, op, value } => Cond::Pos(sprite(s)?, *axis, *op, *value),
        })
    }

    /// Normalised observation: sprite `x/width`, `y/height`, then each
    /// variable mapped from its declared range onto `[-1, 1]`.
    pub fn extract_features(&self, state: &GameState, out: &mut Vec<f64>) {
        out.clear();
        for &(x, y) in &state.positions {
            out.push(x / STAGE_WIDTH);
            out.push(y / STAGE_HEIGHT);
        }
        for (v, spec) in state.variables.iter().zip(&self.spec.variables) {
            let scaled = 2.0 * (v - spec.min) / (spec.max - spec.min) - 1.0;
            out.push(scaled.clamp(-1.0, 1.0));
        }
    }

    pub fn features(&self, state: &GameState) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.feature_count());
        self.extract_features(state, &mut out);
        out
    }

    pub fn check_arity(&self, genome: &Genome) -> Result<()> {
        if genome.input_count() != self.feature_count() || genome.output_count() != self.action_count() {
            return Err(Error::contract(format!(
                "genome arity {}→{} does not match game `{}` ({}→{})",
                genome.input_count(),
                genome.output_count(),
                self.id(),
                self.feature_count(),
                self.action_count()
            )));
        }
        Ok(())
    }
}

impl GameState {
    pub fn pressed(&self) -> Option<usize> {
        self.pressed
    }
}

fn axis_value((x, y): (f64, f64), axis: Axis) -> f64 {
    match axis {
        Axis::X => x,
        Axis::Y => y,
    }
}

fn compare_distance(op: CmpOp, a: f64, b: f64, desired: bool) -> f64 {
    // Only called when the comparison currently disagrees with `desired`.
    let op = if desired { op } else { negate(op) };
    match op {
        CmpOp::Eq => (a - b).abs(),
        CmpOp::Ne => BRANCH_K,
        CmpOp::Lt => a - b + BRANCH_K,
        CmpOp::Le => a - b,
        CmpOp::Gt => b - a + BRANCH_K,
        CmpOp::Ge => b - a,
    }
}

fn negate(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Ge,
        CmpOp::Le => CmpOp::Gt,
        CmpOp::Eq => CmpOp::Ne,
        CmpOp::Ne => CmpOp::Eq,
        CmpOp::Ge => CmpOp::Lt,
        CmpOp::Gt => CmpOp::Le,
    }
}

fn clamp_to_stage(x: f64, y: f64) -> (f64, f64) {
    (x.clamp(0.0, STAGE_WIDTH), y.clamp(0.0, STAGE_HEIGHT))
}

fn circle_hits_rect(x: f64, y: f64, r: f64, w: &Wall) -> bool {
    let nx = x.clamp(w.x_min, w.x_max);
    let ny = y.clamp(w.y_min, w.y_max);
    (x - nx).hypot(y - ny) < r
}
