//! Built-in games.
//!
//! * `coin_maze`: pick up the coin below the start, then walk around a wall
//!   to the door; the door only opens with the coin. A cheat branch (`score > 100`) is unreachable.
//! * `catcher`: steer a paddle under falling items at random columns.
//! * `dodger`: dodge falling rocks until the timer runs out.

use super::spec::*;

struct Builder {
    next: StmtId,
}

impl Builder {
    fn new() -> Self {
        Builder { next: 0 }
    }

    fn id(&mut self) -> StmtId {
        let id = self.next;
        self.next += 1;
        id
    }

    fn act(&mut self, effect: Effect) -> Stmt {
        Stmt::Atomic { id: self.id(), effect }
    }

    fn when(
        &mut self,
        predicate: Predicate,
        then_body: impl FnOnce(&mut Self) -> Vec<Stmt>,
        else_body: impl FnOnce(&mut Self) -> Vec<Stmt>,
    ) -> Stmt {
        let id = self.id();
        let then_body = then_body(self);
        let else_body = else_body(self);
        Stmt::If { id, predicate, then_body, else_body }
    }

    fn key_move(&mut self, key: &str, sprite: &str, dx: f64, dy: f64) -> Stmt {
        self.when(key_down(key), |b| vec![b.act(move_by(sprite, dx, dy))], |_| vec![])
    }
}

fn sprite(name: &str, x: f64, y: f64, radius: f64, jitter: [f64; 2]) -> SpriteSpec {
    SpriteSpec { name: name.into(), x, y, radius, jitter }
}

fn variable(name: &str, initial: f64, min: f64, max: f64) -> VariableSpec {
    VariableSpec { name: name.into(), initial, min, max }
}

fn key_down(action: &str) -> Predicate {
    Predicate::KeyDown { action: action.into() }
}

fn touching(a: &str, b: &str) -> Predicate {
    Predicate::Touching { a: a.into(), b: b.into() }
}

fn var_cmp(var: &str, op: CmpOp, value: f64) -> Predicate {
    Predicate::VarCmp { var: var.into(), op, value }
}

fn pos_cmp(sprite: &str, axis: Axis, op: CmpOp, value: f64) -> Predicate {
    Predicate::PosCmp { sprite: sprite.into(), axis, op, value }
}

fn move_by(sprite: &str, dx: f64, dy: f64) -> Effect {
    Effect::MoveBy { sprite: sprite.into(), dx, dy }
}

fn set_var(var: &str, value: f64) -> Effect {
    Effect::SetVar { var: var.into(), value }
}

fn change_var(var: &str, delta: f64) -> Effect {
    Effect::ChangeVar { var: var.into(), delta }
}

fn say(text: &str) -> Effect {
    Effect::Say { text: text.into() }
}

fn respawn_top(sprite: &str) -> Effect {
    Effect::GoToRandom { sprite: sprite.into(), x_min: 20.0, x_max: 460.0, y_min: 340.0, y_max: 340.0 }
}

fn find_win(scripts: &[Script]) -> Vec<StmtId> {
    fn walk(body: &[Stmt], out: &mut Vec<StmtId>) {
        for s in body {
            match s {
                Stmt::Atomic { id, effect: Effect::Win } => out.push(*id),
                Stmt::Atomic { .. } => {}
                Stmt::If { then_body, else_body, .. } => {
                    walk(then_body, out);
                    walk(else_body, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    for s in scripts {
        walk(&s.body, &mut out);
    }
    out
}

pub fn coin_maze() -> GameSpec {
    let mut b = Builder::new();
    let setup = Script {
        trigger: Trigger::OnStart,
        body: vec![b.act(set_var("score", 0.0)), b.act(set_var("level", 1.0))],
    };
    let controls = Script {
        trigger: Trigger::EveryTick,
        body: vec![
            b.key_move("right", "player", 5.0, 0.0),
            b.key_move("left", "player", -5.0, 0.0),
            b.key_move("up", "player", 0.0, 5.0),
            b.key_move("down", "player", 0.0, -5.0),
        ],
    };
    let coin = Script {
        trigger: Trigger::EveryTick,
        body: vec![b.when(
            var_cmp("coin_taken", CmpOp::Eq, 0.0),
            |b| {
                vec![b.when(
                    touching("player", "coin"),
                    |b| vec![b.act(change_var("score", 1.0)), b.act(set_var("coin_taken", 1.0))],
                    |_| vec![],
                )]
            },
            |_| vec![],
        )],
    };
    let door = Script {
        trigger: Trigger::EveryTick,
        body: vec![b.when(
            touching("player", "door"),
            |b| {
                vec![b.when(
                    var_cmp("score", CmpOp::Ge, 1.0),
                    |b| vec![b.act(set_var("level", 2.0)), b.act(Effect::Win)],
                    |b| vec![b.act(say("I need the coin first"))],
                )]
            },
            |_| vec![],
        )],
    };
    let cheat_check = b.when(var_cmp("score", CmpOp::Gt, 100.0), |b| vec![b.act(say("cheater!"))], |_| vec![]);
    let cheat_id = cheat_check.id();
    let cheat = Script { trigger: Trigger::EveryTick, body: vec![cheat_check] };
    let timer = Script { trigger: Trigger::EveryTick, body: vec![b.act(change_var("time", 1.0))] };
    let scripts = vec![setup, controls, coin, door, cheat, timer];
    GameSpec {
        id: "coin_maze".into(),
        sprites: vec![
            sprite("player", 60.0, 300.0, 12.0, [10.0, 15.0]),
            sprite("coin", 60.0, 60.0, 10.0, [8.0, 10.0]),
            sprite("door", 420.0, 300.0, 16.0, [10.0, 20.0]),
        ],
        variables: vec![
            variable("score", 0.0, 0.0, 2.0),
            variable("coin_taken", 0.0, 0.0, 1.0),
            variable("level", 1.0, 1.0, 2.0),
            variable("time", 0.0, 0.0, 300.0),
        ],
        // Blocks the direct route to the door; the gap is along the floor.
        walls: vec![Wall { x_min: 230.0, y_min: 110.0, x_max: 250.0, y_max: 360.0 }],
        winning_statements: find_win(&scripts),
        unreachable_branches: vec![BranchRef { statement: cheat_id, outcome: true }],
        scripts,
        actions: ["noop", "right", "left", "up", "down"].map(String::from).to_vec(),
        episode_ticks: 300,
    }
}

pub fn catcher() -> GameSpec {
    let mut b = Builder::new();
    let setup = Script {
        trigger: Trigger::OnStart,
        body: vec![b.act(set_var("caught", 0.0)), b.act(set_var("missed", 0.0))],
    };
    let controls = Script {
        trigger: Trigger::EveryTick,
        body: vec![b.key_move("left", "paddle", -8.0, 0.0), b.key_move("right", "paddle", 8.0, 0.0)],
    };
    let item = Script {
        trigger: Trigger::EveryTick,
        body: vec![
            b.act(move_by("item", 0.0, -6.0)),
            b.when(
                touching("paddle", "item"),
                |b| vec![b.act(change_var("caught", 1.0)), b.act(respawn_top("item"))],
                |b| {
                    vec![b.when(
                        pos_cmp("item", Axis::Y, CmpOp::Lt, 12.0),
                        |b| vec![b.act(change_var("missed", 1.0)), b.act(respawn_top("item"))],
                        |_| vec![],
                    )]
                },
            ),
        ],
    };
    let rules = Script {
        trigger: Trigger::EveryTick,
        body: vec![
            b.when(var_cmp("caught", CmpOp::Ge, 5.0), |b| vec![b.act(Effect::Win)], |_| vec![]),
            b.when(var_cmp("missed", CmpOp::Ge, 3.0), |b| vec![b.act(say("game over")), b.act(Effect::Stop)], |_| vec![]),
        ],
    };
    let scripts = vec![setup, controls, item, rules];
    GameSpec {
        id: "catcher".into(),
        sprites: vec![sprite("paddle", 240.0, 20.0, 20.0, [40.0, 0.0]), sprite("item", 240.0, 340.0, 10.0, [220.0, 0.0])],
        variables: vec![variable("caught", 0.0, 0.0, 5.0), variable("missed", 0.0, 0.0, 3.0)],
        walls: vec![],
        winning_statements: find_win(&scripts),
        unreachable_branches: vec![],
        scripts,
        actions: ["noop", "left", "right"].map(String::from).to_vec(),
        episode_ticks: 330,
    }
}

pub fn dodger() -> GameSpec {
    let mut b = Builder::new();
    let setup = Script { trigger: Trigger::OnStart, body: vec![b.act(set_var("lives", 3.0))] };
    let controls = Script {
        trigger: Trigger::EveryTick,
        body: vec![b.key_move("left", "player", -7.0, 0.0), b.key_move("right", "player", 7.0, 0.0)],
    };
    let rock = Script {
        trigger: Trigger::EveryTick,
        body: vec![
            b.act(move_by("rock", 0.0, -12.0)),
            b.when(
                touching("player", "rock"),
                |b| vec![b.act(change_var("lives", -1.0)), b.act(respawn_top("rock"))],
                |b| {
                    vec![b.when(
                        pos_cmp("rock", Axis::Y, CmpOp::Lt, 10.0),
                        |b| vec![b.act(change_var("dodged", 1.0)), b.act(respawn_top("rock"))],
                        |_| vec![],
                    )]
                },
            ),
        ],
    };
    let rules = Script {
        trigger: Trigger::EveryTick,
        body: vec![
            b.when(var_cmp("lives", CmpOp::Le, 0.0), |b| vec![b.act(say("ouch")), b.act(Effect::Stop)], |_| vec![]),
            b.when(var_cmp("dodged", CmpOp::Ge, 6.0), |b| vec![b.act(say("nice streak"))], |_| vec![]),
            b.act(change_var("time", 1.0)),
            b.when(var_cmp("time", CmpOp::Ge, 240.0), |b| vec![b.act(say("survived")), b.act(Effect::Win)], |_| vec![]),
        ],
    };
    let scripts = vec![setup, controls, rock, rules];
    GameSpec {
        id: "dodger".into(),
        sprites: vec![sprite("player", 240.0, 20.0, 15.0, [60.0, 0.0]), sprite("rock", 240.0, 350.0, 12.0, [220.0, 0.0])],
        variables: vec![variable("lives", 3.0, 0.0, 3.0), variable("dodged", 0.0, 0.0, 10.0), variable("time", 0.0, 0.0, 300.0)],
        walls: vec![],
        winning_statements: find_win(&scripts),
        unreachable_branches: vec![],
        scripts,
        actions: ["noop", "left", "right"].map(String::from).to_vec(),
        episode_ticks: 300,
    }
}

pub fn builtin_games() -> Vec<GameSpec> {
    vec![coin_maze(), catcher(), dodger()]
}

pub fn builtin_game(id: &str) -> Option<GameSpec> {
    builtin_games().into_iter().find(|g| g.id == id)
}
