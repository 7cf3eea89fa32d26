//! Read-once decision trees and their compilation into decision-DNNF.
//!
//! JSON schema, recursively: `{"leaf": 0|1}` or
//! `{"var": <feature>, "lo": <tree>, "hi": <tree>}`, where `lo` is taken
//! when the feature is 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nnf::{NnfBuilder, NnfDag, NodeId, OrTag, Var};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("feature {0} is tested twice on one path")]
    RepeatedVar(Var),
    #[error("leaf value {0} is not 0 or 1")]
    BadLeaf(u8),
    #[error("feature {var} is outside 1..={num_features}")]
    VarOutOfRange { var: Var, num_features: usize },
    #[error("malformed tree JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DecisionTree {
    Leaf {
        leaf: u8,
    },
    Node {
        var: Var,
        lo: Box<DecisionTree>,
        hi: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn leaf(value: bool) -> Self {
        DecisionTree::Leaf { leaf: value as u8 }
    }

    pub fn node(var: Var, lo: DecisionTree, hi: DecisionTree) -> Self {
        DecisionTree::Node {
            var,
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trees always serialize")
    }

    /// Largest feature index tested anywhere, 0 for a single leaf.
    pub fn max_var(&self) -> Var {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Node { var, lo, hi } => (*var).max(lo.max_var()).max(hi.max_var()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Node { lo, hi, .. } => 1 + lo.depth().max(hi.depth()),
        }
    }

    /// Direct evaluation by walking one path. `point[i - 1]` is feature `i`.
    pub fn evaluate(&self, point: &[bool]) -> bool {
        let mut t = self;
        loop {
            match t {
                DecisionTree::Leaf { leaf } => return *leaf == 1,
                DecisionTree::Node { var, lo, hi } => {
                    t = if point[*var as usize - 1] { hi } else { lo };
                }
            }
        }
    }

    /// Whether both leaf values occur. Every path of a read-once tree is
    /// realizable, so this is exactly non-constancy.
    pub fn has_both_leaves(&self) -> bool {
        fn walk(t: &DecisionTree, seen: &mut [bool; 2]) {
            match t {
                DecisionTree::Leaf { leaf } => seen[(*leaf != 0) as usize] = true,
                DecisionTree::Node { lo, hi, .. } => {
                    walk(lo, seen);
                    walk(hi, seen);
                }
            }
        }
        let mut seen = [false; 2];
        walk(self, &mut seen);
        seen[0] && seen[1]
    }

    /// Complete tree computing the parity of `vars`, testing them in order.
    pub fn parity(vars: &[Var]) -> Self {
        fn build(vars: &[Var], acc: bool) -> DecisionTree {
            match vars.split_first() {
                None => DecisionTree::leaf(acc),
                Some((&v, rest)) => DecisionTree::node(v, build(rest, acc), build(rest, !acc)),
            }
        }
        build(vars, false)
    }
}

/// Compiles a read-once tree: a test of `x` with subtrees `lo`, `hi` becomes
/// the decision node `(¬x ∧ lo) ∨ (x ∧ hi)`. Literal and constant leaves are
/// shared across the circuit.
pub fn from_decision_tree(tree: &DecisionTree, num_features: usize) -> Result<NnfDag, TreeError> {
    struct Compiler {
        b: NnfBuilder,
        lits: Vec<[Option<NodeId>; 2]>,
        consts: [Option<NodeId>; 2],
        on_path: Vec<bool>,
    }
    impl Compiler {
        fn lit(&mut self, v: Var, pos: bool) -> NodeId {
            if let Some(id) = self.lits[v as usize][pos as usize] {
                return id;
            }
            let id = self.b.literal(v, pos).expect("range checked");
            self.lits[v as usize][pos as usize] = Some(id);
            id
        }

        fn walk(&mut self, t: &DecisionTree) -> Result<NodeId, TreeError> {
            match t {
                DecisionTree::Leaf { leaf } => {
                    if *leaf > 1 {
                        return Err(TreeError::BadLeaf(*leaf));
                    }
                    let v = *leaf == 1;
                    let b = &mut self.b;
                    Ok(*self.consts[v as usize].get_or_insert_with(|| b.constant(v)))
                }
                DecisionTree::Node { var, lo, hi } => {
                    let v = *var;
                    if v == 0 || v as usize >= self.on_path.len() {
                        return Err(TreeError::VarOutOfRange {
                            var: v,
                            num_features: self.on_path.len() - 1,
                        });
                    }
                    if self.on_path[v as usize] {
                        return Err(TreeError::RepeatedVar(v));
                    }
                    self.on_path[v as usize] = true;
                    let lo = self.walk(lo)?;
                    let hi = self.walk(hi)?;
                    self.on_path[v as usize] = false;
                    let neg = self.lit(v, false);
                    let pos = self.lit(v, true);
                    let a = self.b.and(vec![neg, lo]).expect("children exist");
                    let c = self.b.and(vec![pos, hi]).expect("children exist");
                    Ok(self.b.or(vec![a, c], OrTag::Decision(v)).expect("children exist"))
                }
            }
        }
    }
    let mut c = Compiler {
        b: NnfBuilder::new(num_features),
        lits: vec![[None; 2]; num_features + 1],
        consts: [None; 2],
        on_path: vec![false; num_features + 1],
    };
    let root = c.walk(tree)?;
    Ok(c.b.build(root).expect("non-empty"))
}
