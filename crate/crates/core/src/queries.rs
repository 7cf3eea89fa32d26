//! The knowledge-compilation queries the explainers are built on:
//! evaluation, conditioning (CD), consistency (CO), validity (VA) and
//! exact model counting.
//!
//! CO is sound on decomposable circuits, while VA and counting also need
//! determinism. None of these functions checks structure; callers are
//! expected to gate inputs with [`check_structure`](crate::nnf::check_structure).

use std::cell::Cell;
use std::ops::{Add, Mul, Shl};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::nnf::{NnfBuilder, NnfDag, NnfNode, NodeId, OrTag, Var, VarSet};
use crate::FeatureSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("point has {found} values but the circuit has {expected} features")]
    Arity { expected: usize, found: usize },
    #[error("validity over {num_free} variables requested, but the circuit mentions {free_vars}")]
    ScopeTooSmall { num_free: usize, free_vars: usize },
    #[error("feature {var} is already fixed to {existing} in the term")]
    InconsistentTerm { var: Var, existing: bool },
    #[error("feature {var} is outside 1..={num_features}")]
    FeatureOutOfRange { var: Var, num_features: usize },
}

/// A consistent conjunction of literals, at most one per feature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Term {
    values: Vec<Option<bool>>,
    len: usize,
}

impl Term {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, bool)>>(pairs: I) -> Result<Self, QueryError> {
        let mut t = Term::new();
        for (v, val) in pairs {
            t.insert(v, val)?;
        }
        Ok(t)
    }

    /// Adds the literal `var = value`. Re-adding the same literal is a no-op;
    /// adding its complement is an error.
    pub fn insert(&mut self, var: Var, value: bool) -> Result<(), QueryError> {
        let i = var as usize;
        if self.values.len() <= i {
            self.values.resize(i + 1, None);
        }
        match self.values[i] {
            Some(existing) if existing != value => {
                Err(QueryError::InconsistentTerm { var, existing })
            }
            Some(_) => Ok(()),
            None => {
                self.values[i] = Some(value);
                self.len += 1;
                Ok(())
            }
        }
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.values.get(var as usize).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as Var, v)))
    }

    /// Union of two terms; fails if they disagree on some feature.
    pub fn union(&self, other: &Term) -> Result<Term, QueryError> {
        let mut t = self.clone();
        for (v, val) in other.iter() {
            t.insert(v, val)?;
        }
        Ok(t)
    }
}

/// Chooses, per feature, between the free variable and the value of a
/// reference point: features in `fixed` take their value from `point`.
#[derive(Debug, Clone, Copy)]
pub struct Selector<'a> {
    pub fixed: &'a FeatureSet,
    pub point: &'a [bool],
}

impl<'a> Selector<'a> {
    pub fn new(fixed: &'a FeatureSet, point: &'a [bool]) -> Self {
        Selector { fixed, point }
    }

    /// The term `{x_i = v_i : i ∈ fixed}`.
    pub fn term(&self) -> Term {
        let mut t = Term::new();
        for &i in self.fixed {
            t.insert(i, self.point[i as usize - 1])
                .expect("a selector induces a consistent term");
        }
        t
    }
}

/// Number of models of a circuit, counted over the variables it mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Count {
    pub models: BigUint,
    pub free_vars: usize,
}

impl Count {
    /// Number of models over a larger scope of `num_vars` variables.
    pub fn scaled_to(&self, num_vars: usize) -> BigUint {
        assert!(num_vars >= self.free_vars);
        &self.models << (num_vars - self.free_vars)
    }
}

/// Per-thread tallies of query invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounts {
    pub conditioning: u64,
    pub consistency: u64,
    pub validity: u64,
    pub counting: u64,
}

thread_local! {
    static COUNTS: Cell<QueryCounts> = const { Cell::new(QueryCounts {
        conditioning: 0,
        consistency: 0,
        validity: 0,
        counting: 0,
    }) };
}

fn bump(f: impl FnOnce(&mut QueryCounts)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

/// Query invocations made on the current thread so far.
pub fn query_counts() -> QueryCounts {
    COUNTS.with(Cell::get)
}

pub fn reset_query_counts() {
    COUNTS.with(|c| c.set(QueryCounts::default()));
}

pub fn evaluate(dag: &NnfDag, point: &[bool]) -> Result<bool, QueryError> {
    if point.len() != dag.num_features() {
        return Err(QueryError::Arity {
            expected: dag.num_features(),
            found: point.len(),
        });
    }
    let mut val = Vec::with_capacity(dag.root().index() + 1);
    for node in &dag.nodes()[..=dag.root().index()] {
        let v = match node {
            NnfNode::True => true,
            NnfNode::False => false,
            NnfNode::Pos(x) => point[*x as usize - 1],
            NnfNode::Neg(x) => !point[*x as usize - 1],
            NnfNode::And(c) => c.iter().all(|c| val[c.index()]),
            NnfNode::Or { children, .. } => children.iter().any(|c| val[c.index()]),
        };
        val.push(v);
    }
    Ok(val[dag.root().index()])
}

fn condition_dense(dag: &NnfDag, fixed: impl Fn(Var) -> Option<bool>) -> NnfDag {
    bump(|c| c.conditioning += 1);
    let n = dag.root().index() + 1;
    let mut b = NnfBuilder::with_capacity(dag.num_features(), n);
    let mut consts: [Option<NodeId>; 2] = [None, None];
    let mut constant = |b: &mut NnfBuilder, v: bool| *consts[v as usize].get_or_insert_with(|| b.constant(v));
    let mut remap: Vec<NodeId> = Vec::with_capacity(n);
    // a mapped node is constant iff it is one of the two shared constant nodes
    let const_of = |b: &NnfBuilder, id: NodeId| match b.node(id) {
        NnfNode::True => Some(true),
        NnfNode::False => Some(false),
        _ => None,
    };
    for node in &dag.nodes()[..n] {
        let id = match node {
            NnfNode::True => constant(&mut b, true),
            NnfNode::False => constant(&mut b, false),
            NnfNode::Pos(x) | NnfNode::Neg(x) => match fixed(*x) {
                Some(v) => constant(&mut b, v == matches!(node, NnfNode::Pos(_))),
                None => b.add(node.clone()).expect("literal in range"),
            },
            NnfNode::And(children) => {
                let mut kids = Vec::with_capacity(children.len());
                let mut dead = false;
                for c in children {
                    let m = remap[c.index()];
                    match const_of(&b, m) {
                        Some(false) => {
                            dead = true;
                            break;
                        }
                        Some(true) => {}
                        None => kids.push(m),
                    }
                }
                match (dead, kids.len()) {
                    (true, _) => constant(&mut b, false),
                    (false, 0) => constant(&mut b, true),
                    (false, 1) => kids[0],
                    _ => b.add(NnfNode::And(kids)).expect("valid and"),
                }
            }
            NnfNode::Or { children, tag } => {
                let mut kids = Vec::with_capacity(children.len());
                let mut taut = false;
                for c in children {
                    let m = remap[c.index()];
                    match const_of(&b, m) {
                        Some(true) => {
                            taut = true;
                            break;
                        }
                        Some(false) => {}
                        None => kids.push(m),
                    }
                }
                let tag = match tag {
                    OrTag::Decision(v) if fixed(*v).is_some() => OrTag::Plain,
                    t => *t,
                };
                match (taut, kids.len()) {
                    (true, _) => constant(&mut b, true),
                    (false, 0) => constant(&mut b, false),
                    (false, 1) => kids[0],
                    _ => b.add(NnfNode::Or { children: kids, tag }).expect("valid or"),
                }
            }
        };
        remap.push(id);
    }
    b.build_reachable(remap[n - 1])
}

/// Conditions the circuit on a consistent term (Δ|ρ), propagating the
/// resulting constants. The input is left untouched.
pub fn condition(dag: &NnfDag, term: &Term) -> NnfDag {
    condition_dense(dag, |v| term.get(v))
}

/// Conditions on the features selected by `sel`, fixing each to its value
/// in the reference point.
pub fn condition_selector(dag: &NnfDag, sel: &Selector<'_>) -> NnfDag {
    let mut dense = vec![None; dag.num_features() + 1];
    for &i in sel.fixed {
        dense[i as usize] = Some(sel.point[i as usize - 1]);
    }
    condition_dense(dag, |v| dense[v as usize])
}

/// CO: whether some assignment satisfies the circuit. Exact on
/// decomposable circuits.
pub fn is_consistent(dag: &NnfDag) -> bool {
    bump(|c| c.consistency += 1);
    let mut sat = Vec::with_capacity(dag.root().index() + 1);
    for node in &dag.nodes()[..=dag.root().index()] {
        let v = match node {
            NnfNode::False => false,
            NnfNode::True | NnfNode::Pos(_) | NnfNode::Neg(_) => true,
            NnfNode::And(c) => c.iter().all(|c| sat[c.index()]),
            NnfNode::Or { children, .. } => children.iter().any(|c| sat[c.index()]),
        };
        sat.push(v);
    }
    sat[dag.root().index()]
}

trait Tally: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + Shl<usize, Output = Self> {}
impl Tally for u128 {}
impl Tally for BigUint {}

fn count_with<T: Tally>(dag: &NnfDag) -> T {
    let mut counts: Vec<T> = Vec::with_capacity(dag.root().index() + 1);
    for (i, node) in dag.nodes()[..=dag.root().index()].iter().enumerate() {
        let v = match node {
            NnfNode::False => T::zero(),
            NnfNode::True | NnfNode::Pos(_) | NnfNode::Neg(_) => T::one(),
            NnfNode::And(c) => c
                .iter()
                .fold(T::one(), |acc, c| acc * counts[c.index()].clone()),
            NnfNode::Or { children, .. } => {
                // each child is implicitly smoothed: a gadget x ∨ ¬x per
                // missing variable doubles its count
                let width = dag.var_set(NodeId::new(i)).len();
                children.iter().fold(T::zero(), |acc, c| {
                    let gap = width - dag.var_set(*c).len();
                    acc + (counts[c.index()].clone() << gap)
                })
            }
        };
        counts.push(v);
    }
    counts.swap_remove(dag.root().index())
}

/// CT on d-DNNF: the number of models over the variables the circuit
/// mentions. Counting runs on the smoothed circuit, with the smoothing
/// gadgets accounted for arithmetically instead of being materialized.
pub fn count_models(dag: &NnfDag) -> Count {
    bump(|c| c.counting += 1);
    let free_vars = dag.vars().len();
    let models = if free_vars < 128 {
        BigUint::from(count_with::<u128>(dag))
    } else {
        count_with::<BigUint>(dag)
    };
    Count { models, free_vars }
}

/// VA on d-DNNF: whether every assignment to `num_free` variables (a scope
/// that includes every variable the circuit mentions) satisfies it.
pub fn is_valid(dag: &NnfDag, num_free: usize) -> Result<bool, QueryError> {
    bump(|c| c.validity += 1);
    let count = count_models(dag);
    if num_free < count.free_vars {
        return Err(QueryError::ScopeTooSmall {
            num_free,
            free_vars: count.free_vars,
        });
    }
    // models·2^(num_free−free_vars) = 2^num_free  ⇔  models = 2^free_vars
    Ok(count.models == BigUint::one() << count.free_vars)
}

fn dense_selector(dag: &NnfDag, sel: &Selector<'_>) -> (Vec<Option<bool>>, VarSet) {
    let mut dense = vec![None; dag.num_features() + 1];
    for &i in sel.fixed {
        dense[i as usize] = Some(sel.point[i as usize - 1]);
    }
    (dense, sel.fixed.iter().copied().collect())
}

/// CO of `κ|sel`, computed in one pass over `κ` without materializing the
/// conditioned circuit. Same answer as
/// `is_consistent(&condition_selector(dag, sel))`; tallied as one
/// conditioning and one consistency query.
pub fn is_consistent_under(dag: &NnfDag, sel: &Selector<'_>) -> bool {
    bump(|c| {
        c.conditioning += 1;
        c.consistency += 1;
    });
    let (dense, _) = dense_selector(dag, sel);
    let mut sat = Vec::with_capacity(dag.root().index() + 1);
    for node in &dag.nodes()[..=dag.root().index()] {
        let v = match node {
            NnfNode::False => false,
            NnfNode::True => true,
            NnfNode::Pos(x) => dense[*x as usize] != Some(false),
            NnfNode::Neg(x) => dense[*x as usize] != Some(true),
            NnfNode::And(c) => c.iter().all(|c| sat[c.index()]),
            NnfNode::Or { children, .. } => children.iter().any(|c| sat[c.index()]),
        };
        sat.push(v);
    }
    sat[dag.root().index()]
}

fn count_under_with<T: Tally>(dag: &NnfDag, dense: &[Option<bool>], fixed: &VarSet) -> (T, usize) {
    let n = dag.root().index() + 1;
    let width: Vec<usize> = (0..n)
        .map(|i| dag.var_set(NodeId::new(i)).difference_len(fixed))
        .collect();
    let mut counts: Vec<T> = Vec::with_capacity(n);
    for (i, node) in dag.nodes()[..n].iter().enumerate() {
        let v = match node {
            NnfNode::False => T::zero(),
            NnfNode::True => T::one(),
            NnfNode::Pos(x) | NnfNode::Neg(x) => match dense[*x as usize] {
                Some(b) if b != matches!(node, NnfNode::Pos(_)) => T::zero(),
                _ => T::one(),
            },
            NnfNode::And(c) => c
                .iter()
                .fold(T::one(), |acc, c| acc * counts[c.index()].clone()),
            NnfNode::Or { children, .. } => children.iter().fold(T::zero(), |acc, c| {
                acc + (counts[c.index()].clone() << (width[i] - width[c.index()]))
            }),
        };
        counts.push(v);
    }
    (counts.swap_remove(n - 1), width[n - 1])
}

/// VA of `κ|sel` over the features `sel` leaves free, in one pass over `κ`.
/// Same answer as `is_valid(&condition_selector(dag, sel), free)`; tallied
/// as one conditioning and one validity query.
pub fn is_valid_under(dag: &NnfDag, sel: &Selector<'_>) -> bool {
    bump(|c| {
        c.conditioning += 1;
        c.validity += 1;
        c.counting += 1;
    });
    let (dense, fixed) = dense_selector(dag, sel);
    let free = dag.vars().difference_len(&fixed);
    if free < 128 {
        let (count, width) = count_under_with::<u128>(dag, &dense, &fixed);
        count == 1u128 << width
    } else {
        let (count, width) = count_under_with::<BigUint>(dag, &dense, &fixed);
        count == BigUint::one() << width
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnf::parse_c2d;

    fn dag(text: &str) -> NnfDag {
        parse_c2d(text).unwrap()
    }

    #[test]
    fn term_rejects_complementary_literals() {
        let mut t = Term::new();
        t.insert(2, true).unwrap();
        t.insert(2, true).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            t.insert(2, false),
            Err(QueryError::InconsistentTerm { var: 2, existing: true })
        );
        let u = Term::from_pairs([(1, false)]).unwrap();
        assert_eq!(t.union(&u).unwrap().iter().collect::<Vec<_>>(), vec![(1, false), (2, true)]);
    }

    #[test]
    fn evaluate_checks_arity() {
        let d = dag("nnf 1 0 2\nA 0");
        assert_eq!(evaluate(&d, &[false, true]), Ok(true));
        assert_eq!(
            evaluate(&d, &[false]),
            Err(QueryError::Arity { expected: 2, found: 1 })
        );
    }

    #[test]
    fn constants() {
        let f = NnfDag::constant(false, 3);
        assert!(!is_consistent(&f));
        assert_eq!(count_models(&f).models, BigUint::zero());
        let t = NnfDag::constant(true, 4);
        assert!(is_valid(&t, 4).unwrap());
    }

    #[test]
    fn single_literal_count() {
        let d = dag("nnf 1 0 5\nL 1");
        let c = count_models(&d);
        assert_eq!(c.models, BigUint::one());
        assert_eq!(c.free_vars, 1);
        assert_eq!(c.scaled_to(5), BigUint::from(16u32));
        assert!(!is_valid(&d, 5).unwrap());
        assert_eq!(
            is_valid(&dag("nnf 3 2 2\nL 1\nL 2\nA 2 0 1"), 1),
            Err(QueryError::ScopeTooSmall { num_free: 1, free_vars: 2 })
        );
    }

    #[test]
    fn conditioning_with_empty_term_is_identity() {
        let d = dag("nnf 3 2 2\nL 1\nL -2\nA 2 0 1");
        assert_eq!(condition(&d, &Term::new()), d);
    }

    #[test]
    fn conditioning_removes_fixed_variables() {
        // x1 ∨ (¬x1 ∧ x2)
        let d = dag("nnf 5 4 2\nL 1\nL -1\nL 2\nA 2 1 2\nO 1 2 0 3");
        let t = Term::from_pairs([(1, false)]).unwrap();
        let c = condition(&d, &t);
        assert_eq!(c.node(c.root()), &NnfNode::Pos(2));
        assert!(!c.vars().contains(1));
        let t = Term::from_pairs([(1, true)]).unwrap();
        assert_eq!(condition(&d, &t).node(NodeId::new(0)), &NnfNode::True);
    }

    #[test]
    fn large_scope_counts_exactly() {
        // conjunction of 200 positive literals: one model out of 2^200
        let m = 200;
        let mut text = format!("nnf {} {} {}\n", m + 1, m, m);
        for v in 1..=m {
            text.push_str(&format!("L {v}\n"));
        }
        text.push_str(&format!("A {m}"));
        for i in 0..m {
            text.push_str(&format!(" {i}"));
        }
        let d = dag(&text);
        let c = count_models(&d);
        assert_eq!(c.models, BigUint::one());
        assert_eq!(c.free_vars, 200);
        // Or(x1, x2 ∧ … ) over the wide scope stays exact
        let g = crate::nnf::smooth(&d);
        assert_eq!(count_models(&g).models, BigUint::one());
    }

    #[test]
    fn counters_track_calls() {
        reset_query_counts();
        let d = dag("nnf 1 0 1\nL 1");
        is_consistent(&d);
        is_valid(&d, 1).unwrap();
        let c = query_counts();
        assert_eq!((c.consistency, c.validity, c.counting, c.conditioning), (1, 1, 1, 0));
    }
}
