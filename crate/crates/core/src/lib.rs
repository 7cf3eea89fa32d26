//! Formal abductive and contrastive explanations for classifiers compiled
//! into knowledge-compilation languages (d-DNNF, SDD, decision trees, DNNF
//! families).
//!
//! A classifier is an [`NnfDag`] over Boolean features `1..=m`. Explanations
//! are computed with conditioning, consistency and validity queries on the
//! circuit, and enumerated with a SAT-backed hitting-set loop.
//!
//! ```
//! use kcx::explain::{Explainer, Instance, Order};
//! use kcx::{fixtures, Dpll};
//!
//! let dag = fixtures::running_example();
//! let inst = Instance::predicted(&dag, vec![false; 4])?;
//! let ex = Explainer::new(&dag, &inst);
//! assert_eq!(ex.one_axp(&Order::Ascending)?.to_string(), "AXp {4}");
//! let all: Vec<String> = ex
//!     .enumerate(Dpll::new(4), &Order::Ascending)?
//!     .map(|e| e.map(|e| e.to_string()))
//!     .collect::<Result<_, _>>()?;
//! assert_eq!(all, ["AXp {4}", "AXp {2,3}", "CXp {2,4}", "CXp {3,4}"]);
//! # Ok::<(), kcx::ExplainError>(())
//! ```

use std::collections::BTreeSet;

pub mod dataset;
pub mod error;
pub mod explain;
pub mod fixtures;
pub mod gdf;
pub mod gen;
pub mod nnf;
pub mod oracle;
pub mod queries;
pub mod sat;
pub mod tree;

pub use error::{ParseError, ParseErrorKind};
pub use explain::{
    check_duality, Enumerator, ExplainError, Explainer, Explanation, ExplanationRecord, Instance, Kind,
    Order, WeakTest,
};
pub use gdf::{load_gdf, validate_gdf, Gdf, GdfError, GdfExplainer, GdfInstance, GdfValidation, ValidationMode};
pub use nnf::{
    check_structure, parse_c2d, parse_sdd, smooth, to_c2d, NnfBuilder, NnfDag, NnfNode, NodeId, OrTag,
    StructuralReport, Var,
};
pub use queries::{condition, count_models, evaluate, is_consistent, is_valid, Term};
pub use sat::{CnfFormula, DimacsOracle, Dpll, Oracle, OracleModel, SatError};
pub use tree::{from_decision_tree, DecisionTree};

/// A set of 1-based feature indices.
pub type FeatureSet = BTreeSet<Var>;
