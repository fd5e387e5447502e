use crate::error::{Error, Result};
use crate::vm::{BranchRef, Cdg, CdgNode, ExecutionTrace, GameSpec, StmtId, BRANCH_K};

pub type ObjectiveId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Statement,
    Branch(bool),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageObjective {
    pub id: ObjectiveId,
    pub kind: ObjectiveKind,
    /// The statement itself, or the `If` owning the branch.
    pub statement: StmtId,
    /// `None` when the objective hangs directly off a script root.
    pub parent: Option<ObjectiveId>,
    pub cdg_node: usize,
}

impl CoverageObjective {
    pub fn name(&self) -> String {
        match self.kind {
            ObjectiveKind::Statement => format!("s{}", self.statement),
            ObjectiveKind::Branch(true) => format!("b{}:T", self.statement),
            ObjectiveKind::Branch(false) => format!("b{}:F", self.statement),
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self.kind, ObjectiveKind::Branch(_))
    }

    /// Whether `trace` executed the statement or took the branch outcome.
    pub fn covered_by(&self, trace: &ExecutionTrace) -> bool {
        match self.kind {
            ObjectiveKind::Statement => trace.executed(self.statement),
            ObjectiveKind::Branch(outcome) => trace.taken(self.statement, outcome),
        }
    }

    /// First tick the objective was reached in `trace`.
    pub fn first_tick(&self, trace: &ExecutionTrace) -> Option<u32> {
        match self.kind {
            ObjectiveKind::Statement => trace.first_hit[self.statement],
            ObjectiveKind::Branch(outcome) => trace.first_taken[self.statement][outcome as usize],
        }
    }
}

/// All statement and branch objectives of a game with their control
/// dependence hierarchy. Ids follow CDG order, so a parent always has a
/// smaller id than its children.
#[derive(Clone, Debug)]
pub struct ObjectiveSet {
    objectives: Vec<CoverageObjective>,
    children: Vec<Vec<ObjectiveId>>,
    by_node: Vec<Option<ObjectiveId>>,
    cdg: Cdg,
}

impl ObjectiveSet {
    pub fn new(spec: &GameSpec) -> ObjectiveSet {
        let cdg = Cdg::build(spec);
        let mut objectives: Vec<CoverageObjective> = Vec::new();
        let mut by_node = vec![None; cdg.len()];
        for (node, kind) in cdg.nodes().iter().enumerate() {
            let (kind, statement) = match *kind {
                CdgNode::Root(_) => continue,
                CdgNode::Statement(s) => (ObjectiveKind::Statement, s),
                CdgNode::Branch(b) => (ObjectiveKind::Branch(b.outcome), b.statement),
            };
            let id = objectives.len();
            let parent = cdg.parent(node).and_then(|p| by_node[p]);
            by_node[node] = Some(id);
            objectives.push(CoverageObjective { id, kind, statement, parent, cdg_node: node });
        }
        let mut children = vec![Vec::new(); objectives.len()];
        for o in &objectives {
            if let Some(p) = o.parent {
                children[p].push(o.id);
            }
        }
        ObjectiveSet { objectives, children, by_node, cdg }
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }

    pub fn get(&self, id: ObjectiveId) -> Result<&CoverageObjective> {
        self.objectives.get(id).ok_or_else(|| Error::contract(format!("objective {id} is not part of this game")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &CoverageObjective> {
        self.objectives.iter()
    }

    pub fn children(&self, id: ObjectiveId) -> &[ObjectiveId] {
        &self.children[id]
    }

    pub fn cdg(&self) -> &Cdg {
        &self.cdg
    }

    /// Number of CDG edges between the objective and its script root.
    pub fn depth(&self, id: ObjectiveId) -> usize {
        self.cdg.depth(self.objectives[id].cdg_node)
    }

    pub fn find(&self, name: &str) -> Option<ObjectiveId> {
        self.objectives.iter().position(|o| o.name() == name)
    }

    pub fn statement(&self, id: StmtId) -> Option<ObjectiveId> {
        self.by_node[self.cdg.statement_node(id)]
    }

    pub fn branch(&self, branch: BranchRef) -> Option<ObjectiveId> {
        self.cdg.branch_node(branch).and_then(|n| self.by_node[n])
    }

    pub fn branch_count(&self) -> usize {
        self.objectives.iter().filter(|o| o.is_branch()).count()
    }

    pub fn statement_count(&self) -> usize {
        self.len() - self.branch_count()
    }

    /// Uncovered objectives whose parent is a root or already covered.
    pub fn reachable_uncovered(&self, covered: &[bool]) -> Vec<ObjectiveId> {
        self.objectives
            .iter()
            .filter(|o| !covered[o.id] && o.parent.is_none_or(|p| covered[p]))
            .map(|o| o.id)
            .collect()
    }

    fn reached(&self, node: usize, trace: &ExecutionTrace) -> bool {
        match self.cdg.node(node) {
            CdgNode::Root(_) => true,
            CdgNode::Statement(s) => trace.executed(s),
            CdgNode::Branch(b) => trace.taken(b.statement, b.outcome),
        }
    }

    /// Approach level plus normalised branch distance; zero exactly when
    /// `trace` covers the objective.
    ///
    /// Walking up from the objective, the first reached CDG node fixes the
    /// deepest reached control node (an `If`, or the root). The approach
    /// level counts the CDG edges from there down to the objective's own
    /// controlling node, and the branch distance is the smallest distance
    /// recorded at that control node towards the outcome on the path.
    pub fn fitness(&self, id: ObjectiveId, trace: &ExecutionTrace) -> Result<f64> {
        let objective = self.get(id)?;
        if objective.covered_by(trace) {
            return Ok(0.0);
        }
        let mut chain = vec![objective.cdg_node];
        while let Some(p) = self.cdg.parent(*chain.last().unwrap()) {
            chain.push(p);
        }
        let is_control = |n: usize| !matches!(self.cdg.node(n), CdgNode::Branch(_));
        let controlling = (1..chain.len()).find(|&j| is_control(chain[j])).expect("chains end in a root");
        let first = (1..chain.len()).find(|&i| self.reached(chain[i], trace)).expect("roots are always reached");
        let deepest = (first..chain.len()).find(|&i| is_control(chain[i])).expect("chains end in a root");
        let below = chain[deepest - 1];
        let distance = match self.cdg.node(below) {
            CdgNode::Branch(b) if !self.reached(below, trace) => trace.distance(b.statement, b.outcome),
            _ => BRANCH_K,
        };
        let distance = if distance.is_finite() { distance } else { BRANCH_K };
        Ok((deepest - controlling) as f64 + normalise(distance))
    }

    /// Fitness on every objective, indexed by objective id.
    pub fn fitness_vector(&self, trace: &ExecutionTrace) -> Vec<f64> {
        (0..self.len()).map(|id| self.fitness(id, trace).expect("ids in range")).collect()
    }
}

/// Largest normalised distance, kept far enough below 1 that adding an
/// approach level never rounds up into the next level.
const NORMALISED_MAX: f64 = 1.0 - 1e-9;

/// Maps a distance in `[0, ∞)` onto `[0, 1)` as `d / (d + 1)`.
pub fn normalise(distance: f64) -> f64 {
    (distance / (distance + 1.0)).min(NORMALISED_MAX)
}
