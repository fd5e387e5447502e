use super::{ConnectionGene, Genome, InnovationRegistry, NodeGene, NodeKind};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Debug, PartialEq)]
pub struct MutationConfig {
    /// Per-connection chance of a Gaussian nudge.
    pub perturb_probability: f64,
    pub perturb_sigma: f64,
    /// Per-connection chance of a fresh uniform weight.
    pub reset_probability: f64,
    pub add_connection_probability: f64,
    pub add_node_probability: f64,
    /// Chance a gene enabled in one parent and disabled in the other comes
    /// out enabled.
    pub reenable_probability: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            perturb_probability: 0.9,
            perturb_sigma: 0.3,
            reset_probability: 0.1,
            add_connection_probability: 0.1,
            add_node_probability: 0.05,
            reenable_probability: 0.25,
        }
    }
}

pub fn mutate_weights<R: Rng + ?Sized>(genome: &Genome, config: &MutationConfig, rng: &mut R) -> Genome {
    let mut child = genome.clone();
    let noise = Normal::new(0.0, config.perturb_sigma.max(0.0)).expect("finite sigma");
    for c in child.connections_mut().iter_mut().filter(|c| c.enabled) {
        let roll: f64 = rng.random();
        if roll < config.perturb_probability {
            c.weight += noise.sample(rng);
        } else if roll < config.perturb_probability + config.reset_probability {
            c.weight = rng.random_range(-1.0..=1.0);
        }
    }
    child
}

/// Adds one new link between an unconnected node pair that keeps the
/// network acyclic. Returns an unchanged copy when no such pair exists.
pub fn mutate_add_connection<R: Rng + ?Sized>(
    genome: &Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> Genome {
    let mut candidates = Vec::new();
    for src in genome.nodes().iter().filter(|n| n.kind != NodeKind::Output) {
        for dst in genome.nodes().iter().filter(|n| matches!(n.kind, NodeKind::Hidden | NodeKind::Output)) {
            if src.id == dst.id {
                continue;
            }
            let linked = genome.connections().iter().any(|c| c.from == src.id && c.to == dst.id);
            if !linked && !genome.has_path(dst.id, src.id) {
                candidates.push((src.id, dst.id));
            }
        }
    }
    let mut child = genome.clone();
    if let Some(&(from, to)) = candidates.choose(rng) {
        child.push_connection(ConnectionGene {
            innovation: registry.link(from, to),
            from,
            to,
            weight: rng.random_range(-1.0..=1.0),
            enabled: true,
        });
    }
    child
}

/// Splits a random enabled link `a→b` (weight `w`) into `a→h` (1.0) and
/// `h→b` (`w`), disabling the original.
pub fn mutate_add_node<R: Rng + ?Sized>(genome: &Genome, registry: &mut InnovationRegistry, rng: &mut R) -> Genome {
    let enabled: Vec<usize> = (0..genome.connections().len()).filter(|&i| genome.connections()[i].enabled).collect();
    let mut child = genome.clone();
    let Some(&pick) = enabled.choose(rng) else {
        return child;
    };
    let old = genome.connections()[pick];
    child.connections_mut()[pick].enabled = false;
    let hidden = registry.split_node(old.innovation, genome);
    child.push_node(NodeGene { id: hidden, kind: NodeKind::Hidden });
    child.push_connection(ConnectionGene {
        innovation: registry.link(old.from, hidden),
        from: old.from,
        to: hidden,
        weight: 1.0,
        enabled: true,
    });
    child.push_connection(ConnectionGene {
        innovation: registry.link(hidden, old.to),
        from: hidden,
        to: old.to,
        weight: old.weight,
        enabled: true,
    });
    child
}

/// One structural change: a new link or a new node, chosen evenly. Falls
/// back to node insertion when no link can be added.
pub fn mutate_structure<R: Rng + ?Sized>(genome: &Genome, registry: &mut InnovationRegistry, rng: &mut R) -> Genome {
    if rng.random_bool(0.5) {
        let child = mutate_add_connection(genome, registry, rng);
        if child.connections().len() != genome.connections().len() {
            return child;
        }
    }
    mutate_add_node(genome, registry, rng)
}
