//! Instrumented mini-game virtual machine.
//!
//! Games are small sprite programs: scripts of atomic effects and `If`
//! statements over a handful of predicate forms. Every executed statement
//! and every evaluated predicate is recorded, together with the branch
//! distance to both outcomes.

mod cdg;
mod episode;
mod games;
mod machine;
mod spec;

pub use cdg::{Cdg, CdgNode};
pub use episode::{final_state, EpisodeOptions, ExecutionTrace, BEHAVIOR_CHECKPOINTS};
pub use games::{builtin_game, builtin_games, catcher, coin_maze, dodger};
pub use machine::{BranchEval, Game, GameState, TickTrace, BRANCH_K, TOUCH_EPSILON};
pub use spec::{
    Axis, BranchRef, CmpOp, Effect, GameSpec, Predicate, Script, SpriteSpec, Stmt, StmtId, Trigger, VariableSpec, Wall,
    STAGE_HEIGHT, STAGE_WIDTH,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Genome;
    use crate::testutil::{coin_branch, constant_policy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(sprites: Vec<SpriteSpec>, variables: Vec<VariableSpec>, scripts: Vec<Script>) -> GameSpec {
        GameSpec {
            id: "toy".into(),
            sprites,
            variables,
            walls: vec![],
            scripts,
            actions: vec!["noop".into(), "go".into()],
            episode_ticks: 20,
            winning_statements: vec![],
            unreachable_branches: vec![],
        }
    }

    fn sprite(name: &str, x: f64, y: f64, radius: f64) -> SpriteSpec {
        SpriteSpec { name: name.into(), x, y, radius, jitter: [0.0, 0.0] }
    }

    fn var(name: &str, initial: f64) -> VariableSpec {
        VariableSpec { name: name.into(), initial, min: 0.0, max: 10.0 }
    }

    fn atomic(id: StmtId) -> Stmt {
        Stmt::Atomic { id, effect: Effect::Say { text: "hi".into() } }
    }

    #[test]
    fn builtins_are_valid_and_distinct() {
        let games = builtin_games();
        assert!(games.len() >= 3);
        for g in &games {
            g.validate().unwrap();
            Game::new(g.clone()).unwrap();
            assert!(!g.winning_statements.is_empty(), "{}", g.id);
        }
        assert_eq!(builtin_game("catcher").unwrap().id, "catcher");
        assert!(builtin_game("pong").is_none());
        assert!(!coin_maze().unreachable_branches.is_empty());
    }

    #[test]
    fn spec_json_round_trip() {
        for g in builtin_games() {
            let back = GameSpec::from_json(&g.to_json()).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn validation_rejects_unknown_names_and_bad_ids() {
        let mut g = coin_maze();
        g.sprites[0].name = "hero".into();
        assert!(g.validate().is_err());
        let bad = toy(vec![sprite("a", 0.0, 0.0, 1.0)], vec![], vec![Script { trigger: Trigger::EveryTick, body: vec![atomic(0), atomic(0)] }]);
        assert!(bad.validate().is_err());
        let mut ticks = coin_maze();
        ticks.episode_ticks = 0;
        assert!(ticks.validate().is_err());
    }

    #[test]
    fn cdg_counts() {
        for g in builtin_games() {
            let ifs = g.statements().iter().filter(|s| matches!(s, Stmt::If { .. })).count();
            let cdg = Cdg::build(&g);
            assert_eq!(cdg.len(), g.scripts.len() + g.statement_count() + 2 * ifs);
            assert_eq!(cdg.edge_count(), cdg.len() - g.scripts.len());
            assert_eq!(cdg.roots().count(), g.scripts.len());
            for i in 0..cdg.len() {
                for &c in cdg.children(i) {
                    assert_eq!(cdg.parent(c), Some(i));
                }
            }
        }
    }

    #[test]
    fn cdg_flat_and_nested() {
        let flat = toy(vec![sprite("a", 0.0, 0.0, 1.0)], vec![], vec![Script { trigger: Trigger::EveryTick, body: vec![atomic(0), atomic(1), atomic(2)] }]);
        let cdg = Cdg::build(&flat);
        assert_eq!(cdg.children(0).len(), 3);
        assert!((0..3).all(|s| cdg.children(cdg.statement_node(s)).is_empty()));

        let nested = toy(
            vec![sprite("a", 0.0, 0.0, 1.0)],
            vec![],
            vec![Script {
                trigger: Trigger::EveryTick,
                body: vec![Stmt::If { id: 0, predicate: Predicate::KeyDown { action: "go".into() }, then_body: vec![atomic(1)], else_body: vec![] }],
            }],
        );
        let cdg = Cdg::build(&nested);
        let parent = cdg.parent(cdg.statement_node(1)).unwrap();
        assert_eq!(cdg.node(parent), CdgNode::Branch(BranchRef { statement: 0, outcome: true }));
        assert_eq!(cdg.depth(cdg.statement_node(1)), 3);
    }

    #[test]
    fn branch_distance_examples() {
        let spec = toy(
            vec![sprite("player", 0.0, 0.0, 0.5), sprite("coin", 3.0, 4.0, 0.5)],
            vec![var("score", 7.0)],
            vec![Script { trigger: Trigger::EveryTick, body: vec![atomic(0)] }],
        );
        let game = Game::new(spec).unwrap();
        let state = game.initial_state(0);
        let touch = Predicate::Touching { a: "player".into(), b: "coin".into() };
        assert!((game.branch_distance(&touch, &state, true).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(game.branch_distance(&touch, &state, false).unwrap(), 0.0);
        let lt = Predicate::VarCmp { var: "score".into(), op: CmpOp::Lt, value: 3.0 };
        assert_eq!(game.branch_distance(&lt, &state, true).unwrap(), 5.0);
        assert_eq!(game.branch_distance(&lt, &state, false).unwrap(), 0.0);
        let eq = Predicate::VarCmp { var: "score".into(), op: CmpOp::Eq, value: 4.5 };
        assert_eq!(game.branch_distance(&eq, &state, true).unwrap(), 2.5);
        let ne = Predicate::VarCmp { var: "score".into(), op: CmpOp::Ne, value: 7.0 };
        assert_eq!(game.branch_distance(&ne, &state, true).unwrap(), BRANCH_K);
        let key = Predicate::KeyDown { action: "go".into() };
        assert_eq!(game.branch_distance(&key, &state, true).unwrap(), BRANCH_K);
        assert_eq!(game.branch_distance(&key, &state, false).unwrap(), 0.0);
        let unknown = Predicate::KeyDown { action: "jump".into() };
        assert!(game.branch_distance(&unknown, &state, true).is_err());
    }

    #[test]
    fn touching_false_distance_positive_at_contact() {
        let spec = toy(
            vec![sprite("a", 10.0, 10.0, 1.0), sprite("b", 12.0, 10.0, 1.0)],
            vec![],
            vec![Script { trigger: Trigger::EveryTick, body: vec![atomic(0)] }],
        );
        let game = Game::new(spec).unwrap();
        let state = game.initial_state(0);
        let touch = Predicate::Touching { a: "a".into(), b: "b".into() };
        assert!(game.evaluate_predicate(&touch, &state).unwrap());
        assert_eq!(game.branch_distance(&touch, &state, false).unwrap(), TOUCH_EPSILON);
    }

    #[test]
    fn features_are_normalised() {
        let spec = toy(
            vec![sprite("a", STAGE_WIDTH / 2.0, STAGE_HEIGHT / 2.0, 1.0)],
            vec![var("v", 10.0), var("w", 0.0)],
            vec![Script { trigger: Trigger::EveryTick, body: vec![atomic(0)] }],
        );
        let game = Game::new(spec).unwrap();
        let f = game.features(&game.initial_state(3));
        assert_eq!(f, vec![0.5, 0.5, 1.0, -1.0]);
        assert_eq!(f.len(), game.feature_count());
    }

    #[test]
    fn static_game_only_advances_ticks() {
        let spec = toy(vec![sprite("a", 5.0, 5.0, 1.0)], vec![var("v", 1.0)], vec![Script { trigger: Trigger::EveryTick, body: vec![atomic(0)] }]);
        let game = Game::new(spec).unwrap();
        let state = game.initial_state(0);
        let (next, trace) = game.step(&state, 0).unwrap();
        assert_eq!(next.tick, 1);
        assert_eq!(next.positions, state.positions);
        assert_eq!(next.variables, state.variables);
        assert_eq!(trace.executed, vec![0]);
        assert_eq!(game.step(&state, 0).unwrap().0, next);
        assert!(game.step(&state, 9).is_err());
    }

    #[test]
    fn win_stops_and_stopped_games_refuse_steps() {
        let spec = toy(vec![sprite("a", 5.0, 5.0, 1.0)], vec![], vec![Script { trigger: Trigger::EveryTick, body: vec![Stmt::Atomic { id: 0, effect: Effect::Win }, atomic(1)] }]);
        let game = Game::new(spec).unwrap();
        let (next, trace) = game.step(&game.initial_state(0), 0).unwrap();
        assert!(next.stopped && next.won);
        assert_eq!(trace.executed, vec![0]);
        assert!(game.step(&next, 0).is_err());
    }

    #[test]
    fn walls_block_and_stage_clamps() {
        let game = Game::new(coin_maze()).unwrap();
        // Push right along the top: the wall stops the player short of x = 230.
        let state = final_state(&game, 4, |_| 1).unwrap();
        let (x, _) = state.positions[0];
        assert!(x < 230.0 - 12.0 + 1e-9, "x = {x}");
        let state = final_state(&game, 4, |_| 4).unwrap();
        assert_eq!(state.positions[0].1, 0.0);
    }

    #[test]
    fn episodes_are_deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in builtin_games() {
            let game = Game::new(spec).unwrap();
            let genome = Genome::minimal(game.feature_count(), game.action_count(), &mut rng).unwrap();
            for seed in 0..5 {
                let a = game.run_episode(&genome, seed).unwrap();
                let b = game.run_episode(&genome, seed).unwrap();
                assert_eq!(a, b);
                assert!(a.ticks <= game.spec().episode_ticks);
                assert_eq!(a.behavior.len(), BEHAVIOR_CHECKPOINTS.len() * game.feature_count());
                for id in 0..game.statement_count() {
                    for outcome in [false, true] {
                        if a.taken(id, outcome) {
                            assert_eq!(a.distance(id, outcome), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let game = Game::new(coin_maze()).unwrap();
        let genome = constant_policy(2, 2, 0);
        assert!(game.run_episode(&genome, 0).is_err());
    }

    #[test]
    fn tick_log_lists_each_tick() {
        let game = Game::new(catcher()).unwrap();
        let genome = constant_policy(game.feature_count(), game.action_count(), 0);
        let trace = game.run_episode_with(&genome, 2, EpisodeOptions { record_ticks: true }).unwrap();
        assert_eq!(trace.tick_log.unwrap().len(), trace.ticks as usize + 1);
    }

    #[test]
    fn walking_down_picks_up_the_coin() {
        let spec = coin_maze();
        let coin = coin_branch(&spec);
        let game = Game::new(spec).unwrap();
        let down = constant_policy(game.feature_count(), game.action_count(), 4);
        for seed in 0..20 {
            let trace = game.run_episode(&down, seed).unwrap();
            assert!(trace.taken(coin.statement, coin.outcome), "seed {seed}");
            assert!(!trace.won);
        }
    }

    #[test]
    fn scripted_route_around_the_wall_wins() {
        let game = Game::new(coin_maze()).unwrap();
        for seed in 0..20 {
            let trace = game
                .play(seed, EpisodeOptions::default(), |f, _| {
                    let (x, y) = (f[0] * STAGE_WIDTH, f[1] * STAGE_HEIGHT);
                    let (door_x, door_y) = (f[4] * STAGE_WIDTH, f[5] * STAGE_HEIGHT);
                    let coin_taken = f[7] > 0.0;
                    Ok(if !coin_taken || (x < 260.0 && y > 60.0) {
                        4
                    } else if (x - door_x).abs() > 4.0 {
                        if x < door_x { 1 } else { 2 }
                    } else if y < door_y {
                        3
                    } else {
                        4
                    })
                })
                .unwrap();
            assert!(trace.won, "seed {seed}");
        }
    }

    #[test]
    fn random_play_never_reaches_the_cheat_branch() {
        let spec = coin_maze();
        let cheat = spec.unreachable_branches[0];
        let game = Game::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..100 {
            let trace = game.play(seed, EpisodeOptions::default(), |_, _| Ok(rng.random_range(0..5))).unwrap();
            assert!(!trace.taken(cheat.statement, cheat.outcome));
            assert!(trace.taken(cheat.statement, !cheat.outcome));
        }
    }

    #[test]
    fn seeds_jitter_start_positions() {
        let game = Game::new(coin_maze()).unwrap();
        let a = game.initial_state(1);
        let b = game.initial_state(2);
        assert_ne!(a.positions, b.positions);
        assert_eq!(a, game.initial_state(1));
    }
}
