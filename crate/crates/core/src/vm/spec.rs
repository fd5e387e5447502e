//! Game programs as plain data. A [`GameSpec`] round-trips through JSON so
//! custom games can be loaded from disk; see the README for the schema.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

pub const STAGE_WIDTH: f64 = 480.0;
pub const STAGE_HEIGHT: f64 = 360.0;

pub type StmtId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpriteSpec {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    /// Half-widths of the box the start position is jittered in, per seed.
    #[serde(default)]
    pub jitter: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub initial: f64,
    pub min: f64,
    pub max: f64,
}

/// Axis-aligned obstacle no sprite may move into.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    OnStart,
    EveryTick,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub trigger: Trigger,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stmt {
    Atomic {
        id: StmtId,
        effect: Effect,
    },
    If {
        id: StmtId,
        predicate: Predicate,
        #[serde(default)]
        then_body: Vec<Stmt>,
        #[serde(default)]
        else_body: Vec<Stmt>,
    },
}

impl Stmt {
    pub fn id(&self) -> StmtId {
        match self {
            Stmt::Atomic { id, .. } | Stmt::If { id, .. } => *id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Effect {
    MoveBy { sprite: String, dx: f64, dy: f64 },
    GoTo { sprite: String, x: f64, y: f64 },
    /// Teleport to a uniform point of the box, drawn from the game's RNG.
    GoToRandom { sprite: String, x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    SetVar { var: String, value: f64 },
    ChangeVar { var: String, delta: f64 },
    Say { text: String },
    /// Stops the game as won.
    Win,
    /// Stops the game.
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    Touching { a: String, b: String },
    KeyDown { action: String },
    VarCmp { var: String, op: CmpOp, value: f64 },
    PosCmp { sprite: String, axis: Axis, op: CmpOp, value: f64 },
}

/// A branch outcome of an `If` statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchRef {
    pub statement: StmtId,
    pub outcome: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub id: String,
    pub sprites: Vec<SpriteSpec>,
    #[serde(default)]
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    pub scripts: Vec<Script>,
    /// Ordered action labels; the network has one output per label.
    pub actions: Vec<String>,
    pub episode_ticks: u32,
    #[serde(default)]
    pub winning_statements: Vec<StmtId>,
    /// Branches known to be infeasible; informational only.
    #[serde(default)]
    pub unreachable_branches: Vec<BranchRef>,
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<GameSpec> {
        let spec: GameSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game specs always serialize")
    }

    /// Statements in pre-order across scripts.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk<'a>(body: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in body {
                out.push(s);
                if let Stmt::If { then_body, else_body, .. } = s {
                    walk(then_body, out);
                    walk(else_body, out);
                }
            }
        }
        let mut out = Vec::new();
        for script in &self.scripts {
            walk(&script.body, &mut out);
        }
        out
    }

    pub fn statement_count(&self) -> usize {
        self.statements().len()
    }

    pub fn feature_count(&self) -> usize {
        2 * self.sprites.len() + self.variables.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidSpec { game: self.id.clone(), reason });
        if self.episode_ticks < 1 {
            return fail("episode_ticks must be at least 1".into());
        }
        if self.actions.is_empty() {
            return fail("at least one action is required".into());
        }
        if self.feature_count() == 0 {
            return fail("at least one sprite or variable is required".into());
        }
        let mut names = HashSet::new();
        for s in &self.sprites {
            if !names.insert(s.name.as_str()) {
                return fail(format!("duplicate sprite `{}`", s.name));
            }
            if !(s.radius > 0.0) || s.jitter.iter().any(|j| !(*j >= 0.0)) {
                return fail(format!("sprite `{}` needs a positive radius and non-negative jitter", s.name));
            }
        }
        let mut vars = HashSet::new();
        for v in &self.variables {
            if !vars.insert(v.name.as_str()) {
                return fail(format!("duplicate variable `{}`", v.name));
            }
            if !(v.max > v.min) {
                return fail(format!("variable `{}` has an empty range", v.name));
            }
        }
        let mut labels = HashSet::new();
        for a in &self.actions {
            if !labels.insert(a.as_str()) {
                return fail(format!("duplicate action `{a}`"));
            }
        }
        let stmts = self.statements();
        let mut seen = vec![false; stmts.len()];
        for s in &stmts {
            let id = s.id();
            if id >= stmts.len() || std::mem::replace(&mut seen[id], true) {
                return fail(format!("statement ids must be unique and dense in 0..{}, found {id}", stmts.len()));
            }
            match s {
                Stmt::Atomic { effect, .. } => {
                    let (sprite, var) = match effect {
                        Effect::MoveBy { sprite, .. } | Effect::GoTo { sprite, .. } | Effect::GoToRandom { sprite, .. } => {
                            (Some(sprite), None)
                        }
                        Effect::SetVar { var, .. } | Effect::ChangeVar { var, .. } => (None, Some(var)),
                        Effect::Say { .. } | Effect::Win | Effect::Stop => (None, None),
                    };
                    if let Some(sp) = sprite.filter(|sp| !names.contains(sp.as_str())) {
                        return fail(format!("statement {id} references unknown sprite `{sp}`"));
                    }
                    if let Some(v) = var.filter(|v| !vars.contains(v.as_str())) {
                        return fail(format!("statement {id} references unknown variable `{v}`"));
                    }
                }
                Stmt::If { predicate, .. } => {
                    let missing = match predicate {
                        Predicate::Touching { a, b } => [a, b].into_iter().find(|n| !names.contains(n.as_str())),
                        Predicate::KeyDown { action } => Some(action).filter(|a| !labels.contains(a.as_str())),
                        Predicate::VarCmp { var, .. } => Some(var).filter(|v| !vars.contains(v.as_str())),
                        Predicate::PosCmp { sprite, .. } => Some(sprite).filter(|s| !names.contains(s.as_str())),
                    };
                    if let Some(name) = missing {
                        return fail(format!("statement {id} references unknown name `{name}`"));
                    }
                }
            }
        }
        if let Some(w) = self.winning_statements.iter().find(|w| **w >= stmts.len()) {
            return fail(format!("winning statement {w} does not exist"));
        }
        for b in &self.unreachable_branches {
            if !matches!(stmts.iter().find(|s| s.id() == b.statement), Some(Stmt::If { .. })) {
                return fail(format!("unreachable branch refers to non-if statement {}", b.statement));
            }
        }
        Ok(())
    }
}
