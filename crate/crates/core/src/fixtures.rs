//! Small bundled models used by tests, examples and benchmarks.

use crate::nnf::{parse_c2d, parse_sdd, NnfDag, Var};
use crate::tree::{from_decision_tree, DecisionTree};

pub const RUNNING_EXAMPLE_NNF: &str = include_str!("../data/running_example.nnf");
pub const RUNNING_EXAMPLE_SDD: &str = include_str!("../data/running_example.sdd");
pub const RUNNING_COMPLEMENT_NNF: &str = include_str!("../data/running_complement.nnf");

/// κ(x) = x4 ∧ (x3 ∨ x2), in c2d format.
pub fn running_example() -> NnfDag {
    parse_c2d(RUNNING_EXAMPLE_NNF).expect("bundled model parses")
}

/// The same classifier as an SDD.
pub fn running_example_sdd() -> NnfDag {
    parse_sdd(RUNNING_EXAMPLE_SDD, 4).expect("bundled model parses")
}

/// ¬κ as a DNNF: ¬x4 ∨ (x4 ∧ ¬x2 ∧ ¬x3).
pub fn running_complement() -> NnfDag {
    parse_c2d(RUNNING_COMPLEMENT_NNF).expect("bundled model parses")
}

/// Parity of features `1..=k` as a decision-DNNF over `m` features.
pub fn parity(k: usize, m: usize) -> NnfDag {
    assert!(k <= m);
    let vars: Vec<Var> = (1..=k as Var).collect();
    from_decision_tree(&DecisionTree::parity(&vars), m).expect("in range")
}
