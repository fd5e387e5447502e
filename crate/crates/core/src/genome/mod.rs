//! NEAT genotype: node genes plus innovation-numbered connection genes.
//!
//! Genomes are feedforward. Node ids follow a fixed layout so every genome
//! bound to the same game agrees on them: inputs `0..features`, the bias at
//! `features`, outputs right after it, and hidden nodes are handed out by
//! the [`InnovationRegistry`].

mod codec;
mod crossover;
mod mutation;
mod registry;
mod species;

pub use crossover::{crossover, Fitter};
pub use mutation::{mutate_add_connection, mutate_add_node, mutate_structure, mutate_weights, MutationConfig};
pub use registry::InnovationRegistry;
pub use species::{rebase_representatives, speciate, CompatibilityCoefficients, SpeciationParams, Species, SpeciesId};

use crate::error::{Error, Result};
use rand::Rng;
use std::collections::{HashMap, HashSet};

pub type NodeId = u32;
pub type Innovation = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input,
    Bias,
    Hidden,
    Output,
}

impl NodeKind {
    pub fn is_source(self) -> bool {
        matches!(self, NodeKind::Input | NodeKind::Bias)
    }

    pub(crate) fn label(self) -> &'static str {
        match self {
            NodeKind::Input => "input",
            NodeKind::Bias => "bias",
            NodeKind::Hidden => "hidden",
            NodeKind::Output => "output",
        }
    }

    pub(crate) fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "input" => NodeKind::Input,
            "bias" => NodeKind::Bias,
            "hidden" => NodeKind::Hidden,
            "output" => NodeKind::Output,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// A network genotype. Nodes are kept sorted by id and connections by
/// innovation number.
#[derive(Clone, Debug, PartialEq)]
pub struct Genome {
    inputs: usize,
    outputs: usize,
    nodes: Vec<NodeGene>,
    connections: Vec<ConnectionGene>,
}

impl AsRef<Genome> for Genome {
    fn as_ref(&self) -> &Genome {
        self
    }
}

/// Innovation number of the initial source→output link. Shared with the
/// registry so minimal genomes agree without consulting it.
pub(crate) fn initial_innovation(source_index: usize, output_index: usize, outputs: usize) -> Innovation {
    (source_index * outputs + output_index) as Innovation
}

impl Genome {
    /// Input and bias nodes fully connected to every output, weights
    /// uniform in `[-1, 1]`, no hidden nodes.
    pub fn minimal<R: Rng + ?Sized>(features: usize, actions: usize, rng: &mut R) -> Result<Genome> {
        if features == 0 || actions == 0 {
            return Err(Error::contract(format!(
                "minimal genome needs at least one feature and one action, got {features}/{actions}"
            )));
        }
        let mut nodes = Vec::with_capacity(features + 1 + actions);
        nodes.extend((0..features).map(|i| NodeGene { id: i as NodeId, kind: NodeKind::Input }));
        nodes.push(NodeGene { id: features as NodeId, kind: NodeKind::Bias });
        nodes.extend((0..actions).map(|o| NodeGene { id: (features + 1 + o) as NodeId, kind: NodeKind::Output }));

        let mut connections = Vec::with_capacity((features + 1) * actions);
        for src in 0..=features {
            for out in 0..actions {
                connections.push(ConnectionGene {
                    innovation: initial_innovation(src, out, actions),
                    from: src as NodeId,
                    to: (features + 1 + out) as NodeId,
                    weight: rng.random_range(-1.0..=1.0),
                    enabled: true,
                });
            }
        }
        connections.sort_by_key(|c| c.innovation);
        Ok(Genome { inputs: features, outputs: actions, nodes, connections })
    }

    /// Builds a genome from raw parts, checking every structural invariant.
    pub fn from_parts(
        inputs: usize,
        outputs: usize,
        mut nodes: Vec<NodeGene>,
        mut connections: Vec<ConnectionGene>,
    ) -> Result<Genome> {
        nodes.sort_by_key(|n| n.id);
        connections.sort_by_key(|c| c.innovation);
        let genome = Genome { inputs, outputs, nodes, connections };
        genome.validate()?;
        Ok(genome)
    }

    pub(crate) fn from_parts_unchecked(
        inputs: usize,
        outputs: usize,
        mut nodes: Vec<NodeGene>,
        mut connections: Vec<ConnectionGene>,
    ) -> Genome {
        nodes.sort_by_key(|n| n.id);
        connections.sort_by_key(|c| c.innovation);
        Genome { inputs, outputs, nodes, connections }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::contract(msg));
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return bad(format!("duplicate node id {}", n.id));
            }
            let expected = self.layout_kind(n.id);
            if n.kind != expected {
                return bad(format!("node {} has kind {:?}, layout expects {:?}", n.id, n.kind, expected));
            }
        }
        let fixed = self.inputs + 1 + self.outputs;
        if self.nodes.iter().filter(|n| n.kind != NodeKind::Hidden).count() != fixed {
            return bad(format!("expected {fixed} input/bias/output nodes"));
        }
        let mut innovations = HashSet::new();
        let mut pairs = HashSet::new();
        for c in &self.connections {
            if !innovations.insert(c.innovation) {
                return bad(format!("duplicate innovation {}", c.innovation));
            }
            if !pairs.insert((c.from, c.to)) {
                return bad(format!("duplicate connection {}->{}", c.from, c.to));
            }
            if !ids.contains(&c.from) || !ids.contains(&c.to) {
                return bad(format!("connection {} references a missing node", c.innovation));
            }
            if self.layout_kind(c.to).is_source() || self.layout_kind(c.from) == NodeKind::Output {
                return bad(format!("connection {} has an illegal direction", c.innovation));
            }
            if !c.weight.is_finite() {
                return bad(format!("connection {} has a non-finite weight", c.innovation));
            }
        }
        if !self.is_acyclic() {
            return bad("genome contains a directed cycle".to_string());
        }
        Ok(())
    }

    fn layout_kind(&self, id: NodeId) -> NodeKind {
        let id = id as usize;
        if id < self.inputs {
            NodeKind::Input
        } else if id == self.inputs {
            NodeKind::Bias
        } else if id <= self.inputs + self.outputs {
            NodeKind::Output
        } else {
            NodeKind::Hidden
        }
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn connections(&self) -> &[ConnectionGene] {
        &self.connections
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    pub fn has_node(&self, id: NodeId) -> bool {
        self.nodes.binary_search_by_key(&id, |n| n.id).is_ok()
    }

    pub fn innovations(&self) -> impl Iterator<Item = Innovation> + '_ {
        self.connections.iter().map(|c| c.innovation)
    }

    /// Sorted innovation set; identifies the topology independent of weights.
    pub fn signature(&self) -> Vec<Innovation> {
        self.innovations().collect()
    }

    pub(crate) fn connections_mut(&mut self) -> &mut [ConnectionGene] {
        &mut self.connections
    }

    pub(crate) fn push_node(&mut self, node: NodeGene) {
        let at = self.nodes.partition_point(|n| n.id < node.id);
        self.nodes.insert(at, node);
    }

    pub(crate) fn push_connection(&mut self, conn: ConnectionGene) {
        let at = self.connections.partition_point(|c| c.innovation < conn.innovation);
        self.connections.insert(at, conn);
    }

    /// True if some directed path `from ⇝ to` exists over all connections,
    /// enabled or not.
    pub(crate) fn has_path(&self, from: NodeId, to: NodeId) -> bool {
        has_path(&self.connections, from, to)
    }

    /// Topological sort over every connection gene succeeds.
    pub fn is_acyclic(&self) -> bool {
        topological_order(&self.nodes, self.connections.iter()).is_some()
    }

    /// Builds the phenotype once so an episode can reuse it every tick.
    pub fn network(&self) -> Network {
        let order = topological_order(&self.nodes, self.connections.iter().filter(|c| c.enabled))
            .expect("genome invariant: acyclic");
        let index: HashMap<NodeId, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nodes.len()];
        for c in self.connections.iter().filter(|c| c.enabled) {
            incoming[index[&c.to]].push((index[&c.from], c.weight));
        }
        let eval_order = order
            .into_iter()
            .map(|id| index[&id])
            .filter(|&i| !self.nodes[i].kind.is_source())
            .collect();
        let outputs = (0..self.outputs).map(|o| index[&((self.inputs + 1 + o) as NodeId)]).collect();
        Network {
            inputs: self.inputs,
            bias: index[&(self.inputs as NodeId)],
            eval_order,
            incoming,
            outputs,
        }
    }

    /// Feeds `features` through the network and returns one tanh activation
    /// per output node.
    pub fn activate(&self, features: &[f64]) -> Result<Vec<f64>> {
        let net = self.network();
        let mut values = Vec::new();
        net.activate(features, &mut values)?;
        Ok(net.outputs(&values).collect())
    }
}

/// Phenotype compiled from a genome: evaluation order and incoming edges.
#[derive(Clone, Debug)]
pub struct Network {
    inputs: usize,
    bias: usize,
    eval_order: Vec<usize>,
    incoming: Vec<Vec<(usize, f64)>>,
    outputs: Vec<usize>,
}

impl Network {
    /// Fills `values` with every node activation.
    pub fn activate(&self, features: &[f64], values: &mut Vec<f64>) -> Result<()> {
        if features.len() != self.inputs {
            return Err(Error::contract(format!(
                "network expects {} features, got {}",
                self.inputs,
                features.len()
            )));
        }
        values.clear();
        values.resize(self.incoming.len(), 0.0);
        // Sorted node order puts inputs at 0..inputs.
        values[..self.inputs].copy_from_slice(features);
        values[self.bias] = 1.0;
        for &node in &self.eval_order {
            let sum: f64 = self.incoming[node].iter().map(|&(src, w)| values[src] * w).sum();
            values[node] = sum.tanh();
        }
        Ok(())
    }

    pub fn outputs<'a>(&'a self, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.outputs.iter().map(move |&i| values[i])
    }

    /// Index of the strongest output; ties go to the lowest index.
    pub fn argmax(&self, values: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in self.outputs(values).enumerate() {
            if v > values[self.outputs[best]] {
                best = i;
            }
        }
        best
    }
}

fn topological_order<'a>(
    nodes: &[NodeGene],
    edges: impl Iterator<Item = &'a ConnectionGene>,
) -> Option<Vec<NodeId>> {
    let mut indegree: HashMap<NodeId, usize> = nodes.iter().map(|n| (n.id, 0)).collect();
    let mut out: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in edges {
        *indegree.get_mut(&e.to)? += 1;
        out.entry(e.from).or_default().push(e.to);
    }
    // Deterministic: seed the queue in node-id order.
    let mut ready: Vec<NodeId> = nodes.iter().map(|n| n.id).filter(|id| indegree[id] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(id) = ready.pop() {
        order.push(id);
        if let Some(targets) = out.get(&id) {
            for t in targets {
                let d = indegree.get_mut(t).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(*t);
                }
            }
        }
    }
    (order.len() == nodes.len()).then_some(order)
}

pub(crate) fn has_path(connections: &[ConnectionGene], from: NodeId, to: NodeId) -> bool {
    if from == to {
        return true;
    }
    let mut stack = vec![from];
    let mut seen = HashSet::from([from]);
    while let Some(n) = stack.pop() {
        for c in connections.iter().filter(|c| c.from == n) {
            if c.to == to {
                return true;
            }
            if seen.insert(c.to) {
                stack.push(c.to);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn minimal_genome_counts() {
        let g = Genome::minimal(2, 3, &mut rng(1)).unwrap();
        assert_eq!(g.nodes().iter().filter(|n| n.kind.is_source()).count(), 3);
        assert_eq!(g.nodes().iter().filter(|n| n.kind == NodeKind::Output).count(), 3);
        assert_eq!(g.connections().len(), 9);
        assert!(g.connections().iter().all(|c| (-1.0..=1.0).contains(&c.weight)));

        let tiny = Genome::minimal(1, 1, &mut rng(1)).unwrap();
        assert_eq!(tiny.connections().len(), 2);
        assert!(Genome::minimal(0, 1, &mut rng(1)).is_err());
    }

    #[test]
    fn minimal_genome_is_deterministic() {
        assert_eq!(Genome::minimal(4, 2, &mut rng(9)).unwrap(), Genome::minimal(4, 2, &mut rng(9)).unwrap());
        assert_ne!(Genome::minimal(4, 2, &mut rng(9)).unwrap(), Genome::minimal(4, 2, &mut rng(10)).unwrap());
    }

    fn with_weights(mut g: Genome, w: f64) -> Genome {
        for c in g.connections_mut() {
            c.weight = w;
        }
        g
    }

    #[test]
    fn zero_weights_give_zero_outputs() {
        let g = with_weights(Genome::minimal(3, 2, &mut rng(2)).unwrap(), 0.0);
        assert_eq!(g.activate(&[0.3, -0.2, 0.9]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_link_is_tanh() {
        let nodes = vec![
            NodeGene { id: 0, kind: NodeKind::Input },
            NodeGene { id: 1, kind: NodeKind::Bias },
            NodeGene { id: 2, kind: NodeKind::Output },
        ];
        let conns = vec![ConnectionGene { innovation: 0, from: 0, to: 2, weight: 1.0, enabled: true }];
        let g = Genome::from_parts(1, 1, nodes, conns).unwrap();
        assert_eq!(g.activate(&[0.5]).unwrap(), vec![0.5f64.tanh()]);
    }

    #[test]
    fn activate_rejects_wrong_length() {
        let g = Genome::minimal(3, 2, &mut rng(2)).unwrap();
        assert!(matches!(g.activate(&[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn two_hidden_nodes_match_hand_propagation() {
        // in0, in1, bias=2, out3, out4, hidden 5 and 6 with 5 -> 6 chained.
        let nodes = vec![
            NodeGene { id: 0, kind: NodeKind::Input },
            NodeGene { id: 1, kind: NodeKind::Input },
            NodeGene { id: 2, kind: NodeKind::Bias },
            NodeGene { id: 3, kind: NodeKind::Output },
            NodeGene { id: 4, kind: NodeKind::Output },
            NodeGene { id: 5, kind: NodeKind::Hidden },
            NodeGene { id: 6, kind: NodeKind::Hidden },
        ];
        let c = |innovation, from, to, weight, enabled| ConnectionGene { innovation, from, to, weight, enabled };
        let conns = vec![
            c(0, 0, 5, 0.7, true),
            c(1, 1, 5, -1.3, true),
            c(2, 2, 5, 0.25, true),
            c(3, 5, 6, 1.1, true),
            c(4, 0, 6, -0.4, true),
            c(5, 6, 3, 0.9, true),
            c(6, 5, 4, -0.6, true),
            c(7, 2, 4, 0.3, true),
            c(8, 1, 3, 2.0, false),
        ];
        let g = Genome::from_parts(2, 2, nodes, conns).unwrap();
        let (x0, x1): (f64, f64) = (0.4, -0.8);
        let h5 = (0.7 * x0 - 1.3 * x1 + 0.25).tanh();
        let h6 = (1.1 * h5 - 0.4 * x0).tanh();
        let o3 = (0.9 * h6).tanh();
        let o4 = (-0.6 * h5 + 0.3).tanh();
        let out = g.activate(&[x0, x1]).unwrap();
        assert!((out[0] - o3).abs() < 1e-12);
        assert!((out[1] - o4).abs() < 1e-12);
    }

    #[test]
    fn from_parts_rejects_cycles() {
        let nodes = vec![
            NodeGene { id: 0, kind: NodeKind::Input },
            NodeGene { id: 1, kind: NodeKind::Bias },
            NodeGene { id: 2, kind: NodeKind::Output },
            NodeGene { id: 3, kind: NodeKind::Hidden },
            NodeGene { id: 4, kind: NodeKind::Hidden },
        ];
        let c = |innovation, from, to| ConnectionGene { innovation, from, to, weight: 1.0, enabled: true };
        let err = Genome::from_parts(1, 1, nodes, vec![c(0, 3, 4), c(1, 4, 3)]);
        assert!(err.is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        let g = with_weights(Genome::minimal(2, 4, &mut rng(3)).unwrap(), 0.0);
        let net = g.network();
        let mut values = Vec::new();
        net.activate(&[0.1, 0.2], &mut values).unwrap();
        assert_eq!(net.argmax(&values), 0);
    }
}
