use super::{initial_innovation, Genome, Innovation, NodeId};
use std::collections::HashMap;

/// Run-wide bookkeeping for structural genes. The same `(from, to)` link
/// always receives the same innovation number, and splitting the same link
/// hands out the same hidden node id.
#[derive(Clone, Debug)]
pub struct InnovationRegistry {
    links: HashMap<(NodeId, NodeId), Innovation>,
    splits: HashMap<Innovation, Vec<NodeId>>,
    next_innovation: Innovation,
    next_node: NodeId,
}

impl InnovationRegistry {
    /// Reserves the innovations used by [`Genome::minimal`] for this arity.
    pub fn new(features: usize, actions: usize) -> Self {
        let mut links = HashMap::new();
        for src in 0..=features {
            for out in 0..actions {
                let to = (features + 1 + out) as NodeId;
                links.insert((src as NodeId, to), initial_innovation(src, out, actions));
            }
        }
        InnovationRegistry {
            links,
            splits: HashMap::new(),
            next_innovation: ((features + 1) * actions) as Innovation,
            next_node: (features + 1 + actions) as NodeId,
        }
    }

    pub fn link(&mut self, from: NodeId, to: NodeId) -> Innovation {
        *self.links.entry((from, to)).or_insert_with(|| {
            let id = self.next_innovation;
            self.next_innovation += 1;
            id
        })
    }

    /// Hidden node for splitting link `innovation` inside `genome`. Reuses an
    /// earlier split of the same link unless the genome already holds it.
    pub fn split_node(&mut self, innovation: Innovation, genome: &Genome) -> NodeId {
        let known = self.splits.entry(innovation).or_default();
        if let Some(&id) = known.iter().find(|&&id| !genome.has_node(id)) {
            return id;
        }
        let id = self.next_node;
        self.next_node += 1;
        known.push(id);
        id
    }

    pub fn next_innovation(&self) -> Innovation {
        self.next_innovation
    }

    pub fn next_node_id(&self) -> NodeId {
        self.next_node
    }
}
