use crate::genome::Genome;
use crate::vm::{BranchRef, GameSpec, Predicate, Stmt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Genome whose bias drives `action` and nothing else.
pub fn constant_policy(features: usize, actions: usize, action: usize) -> Genome {
    let mut g = Genome::minimal(features, actions, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let bias = features as u32;
    for c in g.connections_mut() {
        c.weight = if c.from == bias && c.to == bias + 1 + action as u32 { 1.0 } else { 0.0 };
    }
    g
}

/// True outcome of the `Touching(_, coin)` check.
pub fn coin_branch(spec: &GameSpec) -> BranchRef {
    spec.statements()
        .into_iter()
        .find_map(|s| match s {
            Stmt::If { id, predicate: Predicate::Touching { b, .. }, .. } if b == "coin" => {
                Some(BranchRef { statement: *id, outcome: true })
            }
            _ => None,
        })
        .expect("game has a coin")
}
