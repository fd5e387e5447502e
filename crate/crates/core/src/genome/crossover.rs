use super::{has_path, ConnectionGene, Genome, MutationConfig, NodeGene, NodeKind};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Which parent is fitter for disjoint/excess gene inheritance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fitter {
    First,
    Second,
    Equal,
}

/// NEAT crossover. Matching genes come from a random parent; disjoint and
/// excess genes come from the fitter parent, or are kept with probability
/// one half each when both parents are equally fit. Under `Equal`, a gene
/// that would close a cycle is skipped.
pub fn crossover<R: Rng + ?Sized>(
    first: &Genome,
    second: &Genome,
    fitter: Fitter,
    config: &MutationConfig,
    rng: &mut R,
) -> Genome {
    let a: BTreeMap<_, _> = first.connections().iter().map(|c| (c.innovation, c)).collect();
    let b: BTreeMap<_, _> = second.connections().iter().map(|c| (c.innovation, c)).collect();
    let innovations: BTreeSet<_> = a.keys().chain(b.keys()).copied().collect();

    let mut genes: Vec<ConnectionGene> = Vec::new();
    for innovation in innovations {
        let gene = match (a.get(&innovation), b.get(&innovation)) {
            (Some(&ga), Some(&gb)) => {
                let mut gene = if rng.random_bool(0.5) { *ga } else { *gb };
                if ga.enabled != gb.enabled {
                    gene.enabled = rng.random::<f64>() < config.reenable_probability;
                }
                gene
            }
            (Some(&g), None) => match fitter {
                Fitter::First => *g,
                Fitter::Second => continue,
                Fitter::Equal if rng.random_bool(0.5) => *g,
                Fitter::Equal => continue,
            },
            (None, Some(&g)) => match fitter {
                Fitter::Second => *g,
                Fitter::First => continue,
                Fitter::Equal if rng.random_bool(0.5) => *g,
                Fitter::Equal => continue,
            },
            (None, None) => unreachable!(),
        };
        if fitter == Fitter::Equal && has_path(&genes, gene.to, gene.from) {
            continue;
        }
        genes.push(gene);
    }

    let mut nodes: Vec<NodeGene> = first.nodes().iter().filter(|n| n.kind != NodeKind::Hidden).copied().collect();
    let hidden: BTreeSet<_> = genes
        .iter()
        .flat_map(|g| [g.from, g.to])
        .filter(|id| !nodes.iter().any(|n| n.id == *id))
        .collect();
    nodes.extend(hidden.into_iter().map(|id| NodeGene { id, kind: NodeKind::Hidden }));
    Genome::from_parts_unchecked(first.input_count(), first.output_count(), nodes, genes)
}
