use super::spec::{BranchRef, GameSpec, Stmt, StmtId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CdgNode {
    /// Entry of the script with this index.
    Root(usize),
    Statement(StmtId),
    Branch(BranchRef),
}

/// Control dependence hierarchy: each script root controls its top-level
/// statements, an `If` statement controls its two outcomes, and an outcome
/// controls the statements of its body.
#[derive(Clone, Debug)]
pub struct Cdg {
    nodes: Vec<CdgNode>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    statement_node: Vec<usize>,
    branch_node: Vec<Option<[usize; 2]>>,
}

impl Cdg {
    pub fn build(spec: &GameSpec) -> Cdg {
        let count = spec.statement_count();
        let mut cdg = Cdg {
            nodes: Vec::new(),
            parent: Vec::new(),
            children: Vec::new(),
            statement_node: vec![usize::MAX; count],
            branch_node: vec![None; count],
        };
        for (i, script) in spec.scripts.iter().enumerate() {
            let root = cdg.add(CdgNode::Root(i), None);
            cdg.add_body(&script.body, root);
        }
        cdg
    }

    fn add(&mut self, node: CdgNode, parent: Option<usize>) -> usize {
        let index = self.nodes.len();
        self.nodes.push(node);
        self.parent.push(parent);
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p].push(index);
        }
        index
    }

    fn add_body(&mut self, body: &[Stmt], parent: usize) {
        for stmt in body {
            let node = self.add(CdgNode::Statement(stmt.id()), Some(parent));
            self.statement_node[stmt.id()] = node;
            if let Stmt::If { id, then_body, else_body, .. } = stmt {
                let f = self.add(CdgNode::Branch(BranchRef { statement: *id, outcome: false }), Some(node));
                let t = self.add(CdgNode::Branch(BranchRef { statement: *id, outcome: true }), Some(node));
                self.branch_node[*id] = Some([f, t]);
                self.add_body(then_body, t);
                self.add_body(else_body, f);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, index: usize) -> CdgNode {
        self.nodes[index]
    }

    pub fn nodes(&self) -> &[CdgNode] {
        &self.nodes
    }

    pub fn parent(&self, index: usize) -> Option<usize> {
        self.parent[index]
    }

    pub fn children(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    pub fn statement_node(&self, id: StmtId) -> usize {
        self.statement_node[id]
    }

    pub fn branch_node(&self, branch: BranchRef) -> Option<usize> {
        self.branch_node[branch.statement].map(|n| n[branch.outcome as usize])
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().flatten().count()
    }

    /// Number of edges between `index` and its script root.
    pub fn depth(&self, mut index: usize) -> usize {
        let mut depth = 0;
        while let Some(p) = self.parent[index] {
            depth += 1;
            index = p;
        }
        depth
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.parent[i].is_none())
    }
}
