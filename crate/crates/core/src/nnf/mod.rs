//! Immutable NNF circuits.
//!
//! Nodes are stored in topological order: every child id is strictly
//! smaller than the id of its parent, so a single forward pass over the
//! node array is a valid bottom-up traversal. Features are numbered
//! `1..=num_features`.

mod c2d;
mod sdd;
mod varset;

use thiserror::Error;

pub use c2d::{parse_c2d, to_c2d};
pub use sdd::parse_sdd;
pub use varset::VarSet;

/// A feature (propositional variable), numbered from 1.
pub type Var = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(index: usize) -> Self {
        NodeId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// How an OR node justifies that its children are pairwise inconsistent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrTag {
    /// No evidence.
    Plain,
    /// Decision node: each child carries a distinct literal of this variable.
    Decision(Var),
    /// SDD decision node, whose primes partition the space by construction.
    Partition,
}

impl OrTag {
    pub fn decision_var(self) -> Option<Var> {
        match self {
            OrTag::Decision(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NnfNode {
    True,
    False,
    Pos(Var),
    Neg(Var),
    And(Vec<NodeId>),
    Or { children: Vec<NodeId>, tag: OrTag },
}

impl NnfNode {
    pub fn children(&self) -> &[NodeId] {
        match self {
            NnfNode::And(c) | NnfNode::Or { children: c, .. } => c,
            _ => &[],
        }
    }

    /// The variable and polarity of a literal node.
    pub fn literal(&self) -> Option<(Var, bool)> {
        match *self {
            NnfNode::Pos(v) => Some((v, true)),
            NnfNode::Neg(v) => Some((v, false)),
            _ => None,
        }
    }

    pub fn constant(value: bool) -> Self {
        if value {
            NnfNode::True
        } else {
            NnfNode::False
        }
    }

    pub fn literal_node(var: Var, positive: bool) -> Self {
        if positive {
            NnfNode::Pos(var)
        } else {
            NnfNode::Neg(var)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("node {node} references child {child}, which is not an earlier node")]
    ForwardReference { node: usize, child: usize },
    #[error("node {node} is a connective without children")]
    EmptyConnective { node: usize },
    #[error("variable {var} at node {node} is outside 1..={num_features}")]
    VarOutOfRange {
        node: usize,
        var: Var,
        num_features: usize,
    },
    #[error("circuit has no nodes")]
    Empty,
    #[error("root {root} does not name a node")]
    BadRoot { root: usize },
}

/// Incremental construction of an [`NnfDag`] with the topological
/// invariant checked on every insertion.
#[derive(Debug, Clone)]
pub struct NnfBuilder {
    num_features: usize,
    nodes: Vec<NnfNode>,
    var_sets: Vec<VarSet>,
}

impl NnfBuilder {
    pub fn new(num_features: usize) -> Self {
        NnfBuilder {
            num_features,
            nodes: Vec::new(),
            var_sets: Vec::new(),
        }
    }

    pub fn with_capacity(num_features: usize, capacity: usize) -> Self {
        NnfBuilder {
            num_features,
            nodes: Vec::with_capacity(capacity),
            var_sets: Vec::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &NnfNode {
        &self.nodes[id.index()]
    }

    pub fn var_set(&self, id: NodeId) -> &VarSet {
        &self.var_sets[id.index()]
    }

    pub fn add(&mut self, node: NnfNode) -> Result<NodeId, DagError> {
        let id = self.nodes.len();
        let vars = match &node {
            NnfNode::True | NnfNode::False => VarSet::new(),
            NnfNode::Pos(v) | NnfNode::Neg(v) => {
                if *v == 0 || *v as usize > self.num_features {
                    return Err(DagError::VarOutOfRange {
                        node: id,
                        var: *v,
                        num_features: self.num_features,
                    });
                }
                VarSet::singleton(*v)
            }
            NnfNode::And(children) | NnfNode::Or { children, .. } => {
                if children.is_empty() {
                    return Err(DagError::EmptyConnective { node: id });
                }
                let mut vars = VarSet::new();
                for c in children {
                    if c.index() >= id {
                        return Err(DagError::ForwardReference {
                            node: id,
                            child: c.index(),
                        });
                    }
                    vars.union_with(&self.var_sets[c.index()]);
                }
                if let NnfNode::Or {
                    tag: OrTag::Decision(v),
                    ..
                } = &node
                {
                    if *v == 0 || *v as usize > self.num_features {
                        return Err(DagError::VarOutOfRange {
                            node: id,
                            var: *v,
                            num_features: self.num_features,
                        });
                    }
                }
                vars
            }
        };
        self.nodes.push(node);
        self.var_sets.push(vars);
        Ok(NodeId::new(id))
    }

    pub fn constant(&mut self, value: bool) -> NodeId {
        self.add(NnfNode::constant(value))
            .expect("constants are always valid")
    }

    pub fn literal(&mut self, var: Var, positive: bool) -> Result<NodeId, DagError> {
        self.add(NnfNode::literal_node(var, positive))
    }

    pub fn and(&mut self, children: Vec<NodeId>) -> Result<NodeId, DagError> {
        self.add(NnfNode::And(children))
    }

    pub fn or(&mut self, children: Vec<NodeId>, tag: OrTag) -> Result<NodeId, DagError> {
        self.add(NnfNode::Or { children, tag })
    }

    /// Finishes the circuit. Nodes unreachable from `root` are kept.
    pub fn build(self, root: NodeId) -> Result<NnfDag, DagError> {
        if self.nodes.is_empty() {
            return Err(DagError::Empty);
        }
        if root.index() >= self.nodes.len() {
            return Err(DagError::BadRoot { root: root.index() });
        }
        Ok(NnfDag {
            nodes: self.nodes,
            var_sets: self.var_sets,
            root,
            num_features: self.num_features,
        })
    }

    /// Finishes the circuit keeping only nodes reachable from `root`,
    /// renumbered in their original relative order.
    pub(crate) fn build_reachable(self, root: NodeId) -> NnfDag {
        let n = root.index() + 1;
        let mut live = vec![false; n];
        live[root.index()] = true;
        for i in (0..n).rev() {
            if live[i] {
                for c in self.nodes[i].children() {
                    live[c.index()] = true;
                }
            }
        }
        if live.iter().all(|&l| l) && n == self.nodes.len() {
            return NnfDag {
                nodes: self.nodes,
                var_sets: self.var_sets,
                root,
                num_features: self.num_features,
            };
        }
        let mut remap = vec![NodeId(u32::MAX); n];
        let mut nodes = Vec::with_capacity(n);
        let mut var_sets = Vec::with_capacity(n);
        for (i, (node, vars)) in self
            .nodes
            .into_iter()
            .zip(self.var_sets)
            .take(n)
            .enumerate()
        {
            if !live[i] {
                continue;
            }
            remap[i] = NodeId::new(nodes.len());
            let node = match node {
                NnfNode::And(c) => NnfNode::And(c.iter().map(|c| remap[c.index()]).collect()),
                NnfNode::Or { children, tag } => NnfNode::Or {
                    children: children.iter().map(|c| remap[c.index()]).collect(),
                    tag,
                },
                leaf => leaf,
            };
            nodes.push(node);
            var_sets.push(vars);
        }
        NnfDag {
            root: NodeId::new(nodes.len() - 1),
            nodes,
            var_sets,
            num_features: self.num_features,
        }
    }
}

/// An immutable NNF circuit over features `1..=num_features`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnfDag {
    nodes: Vec<NnfNode>,
    var_sets: Vec<VarSet>,
    root: NodeId,
    num_features: usize,
}

impl NnfDag {
    pub fn constant(value: bool, num_features: usize) -> Self {
        let mut b = NnfBuilder::new(num_features);
        let r = b.constant(value);
        b.build(r).expect("non-empty")
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: a circuit has at least one node.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    pub fn nodes(&self) -> &[NnfNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NnfNode {
        &self.nodes[id.index()]
    }

    pub fn var_set(&self, id: NodeId) -> &VarSet {
        &self.var_sets[id.index()]
    }

    /// Variables mentioned beneath the root.
    pub fn vars(&self) -> &VarSet {
        self.var_set(self.root)
    }

    /// Returns the same circuit declared over a larger feature space.
    pub fn with_num_features(mut self, num_features: usize) -> Result<Self, DagError> {
        if let Some(var) = self.var_sets.iter().flat_map(|s| s.iter()).max() {
            if var as usize > num_features {
                return Err(DagError::VarOutOfRange {
                    node: self.root.index(),
                    var,
                    num_features,
                });
            }
        }
        self.num_features = num_features;
        Ok(self)
    }
}

/// Result of [`check_structure`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct StructuralReport {
    pub decomposable: bool,
    pub decision_deterministic: bool,
    pub smooth: bool,
    /// First node, in topological order, that breaks decomposability or
    /// determinism. Smoothness violations are not reported here.
    pub offending_node: Option<usize>,
    /// OR nodes accepted as deterministic on SDD partition semantics alone.
    pub trusted_partitions: usize,
}

impl StructuralReport {
    /// The circuit is certified d-DNNF.
    pub fn is_d_dnnf(&self) -> bool {
        self.decomposable && self.decision_deterministic
    }
}

fn is_decision_or(dag_nodes: &[NnfNode], var: Var, children: &[NodeId]) -> bool {
    let mut seen = [false; 2];
    for c in children {
        let lit = match &dag_nodes[c.index()] {
            NnfNode::And(grand) => {
                let mut found = None;
                for g in grand {
                    if let Some((v, pol)) = dag_nodes[g.index()].literal() {
                        if v == var {
                            if found.is_some() {
                                return false;
                            }
                            found = Some(pol);
                        }
                    }
                }
                found
            }
            leaf => leaf.literal().filter(|(v, _)| *v == var).map(|(_, p)| p),
        };
        match lit {
            Some(pol) if !seen[pol as usize] => seen[pol as usize] = true,
            _ => return false,
        }
    }
    true
}

/// Checks decomposability, decision-form determinism and smoothness.
///
/// Determinism is certified structurally only: an OR is accepted when it is
/// a decision node on its variable, when it has a single child, or when it
/// stems from an SDD decision node.
pub fn check_structure(dag: &NnfDag) -> StructuralReport {
    let mut report = StructuralReport {
        decomposable: true,
        decision_deterministic: true,
        smooth: true,
        offending_node: None,
        trusted_partitions: 0,
    };
    for (i, node) in dag.nodes.iter().enumerate() {
        match node {
            NnfNode::And(children) => {
                let mut seen = VarSet::new();
                for c in children {
                    let vs = &dag.var_sets[c.index()];
                    if !seen.is_disjoint(vs) {
                        report.decomposable = false;
                        report.offending_node.get_or_insert(i);
                        break;
                    }
                    seen.union_with(vs);
                }
            }
            NnfNode::Or { children, tag } => {
                let deterministic = children.len() == 1
                    || match tag {
                        OrTag::Plain => false,
                        OrTag::Partition => {
                            report.trusted_partitions += 1;
                            true
                        }
                        OrTag::Decision(v) => is_decision_or(&dag.nodes, *v, children),
                    };
                if !deterministic {
                    report.decision_deterministic = false;
                    report.offending_node.get_or_insert(i);
                }
                let vars = &dag.var_sets[i];
                if children.iter().any(|c| dag.var_sets[c.index()] != *vars) {
                    report.smooth = false;
                }
            }
            _ => {}
        }
    }
    report
}

/// Returns an equivalent circuit in which the children of every OR mention
/// the same variables. Deficient children are conjoined with `x ∨ ¬x`
/// gadgets, one shared gadget per variable.
pub fn smooth(dag: &NnfDag) -> NnfDag {
    let mut b = NnfBuilder::with_capacity(dag.num_features, dag.len());
    let mut remap: Vec<NodeId> = Vec::with_capacity(dag.len());
    let mut gadgets: Vec<Option<NodeId>> = vec![None; dag.num_features + 1];
    let mut gadget = |b: &mut NnfBuilder, v: Var| -> NodeId {
        if let Some(g) = gadgets[v as usize] {
            return g;
        }
        let p = b.add(NnfNode::Pos(v)).expect("variable in range");
        let n = b.add(NnfNode::Neg(v)).expect("variable in range");
        let g = b
            .add(NnfNode::Or {
                children: vec![p, n],
                tag: OrTag::Decision(v),
            })
            .expect("children precede gadget");
        gadgets[v as usize] = Some(g);
        g
    };
    for (i, node) in dag.nodes.iter().enumerate() {
        let new = match node {
            NnfNode::Or { children, tag } => {
                let vars = &dag.var_sets[i];
                let mut kids = Vec::with_capacity(children.len());
                for c in children {
                    let missing = vars.difference(&dag.var_sets[c.index()]);
                    let mapped = remap[c.index()];
                    if missing.is_empty() {
                        kids.push(mapped);
                        continue;
                    }
                    let mut conj = match b.node(mapped) {
                        NnfNode::And(grand) => grand.clone(),
                        _ => vec![mapped],
                    };
                    for v in missing.iter() {
                        conj.push(gadget(&mut b, v));
                    }
                    kids.push(b.add(NnfNode::And(conj)).expect("valid and"));
                }
                NnfNode::Or {
                    children: kids,
                    tag: *tag,
                }
            }
            NnfNode::And(children) => {
                NnfNode::And(children.iter().map(|c| remap[c.index()]).collect())
            }
            leaf => leaf.clone(),
        };
        remap.push(b.add(new).expect("valid node"));
    }
    b.build(remap[dag.root.index()]).expect("non-empty")
}
