//! Abductive (AXp) and contrastive (CXp) explanations.
//!
//! Every algorithm here talks to the classifier only through a
//! [`WeakTest`]: "is this set of fixed features a weak AXp?" and "is this set
//! of free features a weak CXp?". For a single circuit both questions reduce
//! to conditioning followed by one consistency or validity query, see
//! [`Explainer`]. The multi-class variant lives in [`crate::gdf`].

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nnf::{NnfDag, Var};
use crate::queries::{self, QueryError, Selector};
use crate::sat::{CnfFormula, Lit, Oracle, SatError};
use crate::FeatureSet;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("the classifier is constant ({0}); contrastive explanations do not exist")]
    ConstantClassifier(bool),
    #[error("seed {seed:?} is not a weak {kind}")]
    SeedNotWeak { kind: Kind, seed: Vec<Var> },
    #[error("instance is classified as {actual}, not {claimed}")]
    ClassMismatch { claimed: bool, actual: bool },
    #[error("invalid feature order: {0}")]
    BadOrder(String),
    #[error("oracle model {0:?} is neither a weak AXp seed nor a weak CXp complement")]
    SeedDichotomy(Vec<bool>),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Axp,
    Cxp,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Axp => "AXp",
            Kind::Cxp => "CXp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Explanation {
    pub kind: Kind,
    pub features: FeatureSet,
}

impl Explanation {
    pub fn axp(features: FeatureSet) -> Self {
        Explanation {
            kind: Kind::Axp,
            features,
        }
    }

    pub fn cxp(features: FeatureSet) -> Self {
        Explanation {
            kind: Kind::Cxp,
            features,
        }
    }
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.features.iter().map(|v| v.to_string()).collect();
        write!(f, "{} {{{}}}", self.kind, items.join(","))
    }
}

/// One JSON line of explainer output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub kind: Kind,
    pub features: Vec<Var>,
    pub instance: Vec<u8>,
    pub class: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ExplanationRecord {
    pub fn new(e: &Explanation, point: &[bool], class: usize) -> Self {
        ExplanationRecord {
            kind: e.kind,
            features: e.features.iter().copied().collect(),
            instance: point.iter().map(|&b| b as u8).collect(),
            class,
            label: None,
        }
    }
}

/// A point of feature space together with the class the circuit assigns it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    point: Vec<bool>,
    class: bool,
}

impl Instance {
    /// Checks that `dag` indeed predicts `class` on `point`.
    pub fn new(dag: &NnfDag, point: Vec<bool>, class: bool) -> Result<Self, ExplainError> {
        let actual = queries::evaluate(dag, &point)?;
        if actual != class {
            return Err(ExplainError::ClassMismatch {
                claimed: class,
                actual,
            });
        }
        Ok(Instance { point, class })
    }

    /// The instance with whatever class `dag` predicts.
    pub fn predicted(dag: &NnfDag, point: Vec<bool>) -> Result<Self, ExplainError> {
        let class = queries::evaluate(dag, &point)?;
        Ok(Instance { point, class })
    }

    pub fn point(&self) -> &[bool] {
        &self.point
    }

    pub fn class(&self) -> bool {
        self.class
    }
}

/// The order in which greedy shrinking visits features.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Order {
    #[default]
    Ascending,
    Explicit(Vec<Var>),
    Shuffled(u64),
}

impl Order {
    /// Expands the policy into a permutation of `1..=m`.
    pub fn resolve(&self, m: usize) -> Result<Vec<Var>, ExplainError> {
        let ascending: Vec<Var> = (1..=m as Var).collect();
        match self {
            Order::Ascending => Ok(ascending),
            Order::Shuffled(seed) => {
                let mut v = ascending;
                v.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                Ok(v)
            }
            Order::Explicit(perm) => {
                let mut sorted = perm.clone();
                sorted.sort_unstable();
                if sorted != ascending {
                    return Err(ExplainError::BadOrder(format!(
                        "{perm:?} is not a permutation of 1..={m}"
                    )));
                }
                Ok(perm.clone())
            }
        }
    }
}

/// The two weak-explanation predicates of a classifier at a fixed instance.
pub trait WeakTest {
    fn num_features(&self) -> usize;

    /// Whether fixing `fixed` to the instance values forces the prediction.
    fn is_weak_axp(&self, fixed: &FeatureSet) -> bool;

    /// Whether freeing `free` (fixing the rest) admits another prediction.
    fn is_weak_cxp(&self, free: &FeatureSet) -> bool;

    fn all_features(&self) -> FeatureSet {
        (1..=self.num_features() as Var).collect()
    }

    fn complement(&self, set: &FeatureSet) -> FeatureSet {
        (1..=self.num_features() as Var)
            .filter(|v| !set.contains(v))
            .collect()
    }
}

/// Greedy deletion inside `seed`: drop each feature, in `order`, whose
/// removal keeps the set weak for `kind`.
fn shrink<T: WeakTest + ?Sized>(test: &T, kind: Kind, seed: FeatureSet, order: &[Var]) -> FeatureSet {
    let mut set = seed;
    for v in order {
        if !set.remove(v) {
            continue;
        }
        let still_weak = match kind {
            Kind::Axp => test.is_weak_axp(&set),
            Kind::Cxp => test.is_weak_cxp(&set),
        };
        if !still_weak {
            set.insert(*v);
        }
    }
    set
}

/// Shrinks a weak AXp seed to an AXp contained in it.
pub fn find_axp<T: WeakTest + ?Sized>(test: &T, seed: FeatureSet, order: &[Var]) -> Result<Explanation, ExplainError> {
    if !test.is_weak_axp(&seed) {
        return Err(ExplainError::SeedNotWeak {
            kind: Kind::Axp,
            seed: seed.into_iter().collect(),
        });
    }
    Ok(Explanation::axp(shrink(test, Kind::Axp, seed, order)))
}

/// Shrinks a weak CXp seed to a CXp contained in it.
pub fn find_cxp<T: WeakTest + ?Sized>(test: &T, seed: FeatureSet, order: &[Var]) -> Result<Explanation, ExplainError> {
    if !test.is_weak_cxp(&seed) {
        return Err(ExplainError::SeedNotWeak {
            kind: Kind::Cxp,
            seed: seed.into_iter().collect(),
        });
    }
    Ok(Explanation::cxp(shrink(test, Kind::Cxp, seed, order)))
}

/// Explanations of a single d-DNNF classifier at one instance.
///
/// With `s` the set of fixed features and `Δ = κ|s,v` the conditioned circuit:
/// a weak AXp needs `Δ` valid when `c = 1` and inconsistent when `c = 0`;
/// a weak CXp (over the free set) needs the opposite.
#[derive(Debug, Clone)]
pub struct Explainer<'a> {
    dag: &'a NnfDag,
    instance: &'a Instance,
    constant: Option<bool>,
}

impl<'a> Explainer<'a> {
    pub fn new(dag: &'a NnfDag, instance: &'a Instance) -> Self {
        let m = dag.num_features();
        let constant = if !queries::is_consistent(dag) {
            Some(false)
        } else if queries::is_valid(dag, m).expect("root scope is within 1..=m") {
            Some(true)
        } else {
            None
        };
        Explainer {
            dag,
            instance,
            constant,
        }
    }

    pub fn dag(&self) -> &NnfDag {
        self.dag
    }

    pub fn instance(&self) -> &Instance {
        self.instance
    }

    /// `Some(value)` when the classifier ignores its input.
    pub fn constant(&self) -> Option<bool> {
        self.constant
    }

    fn ensure_non_constant(&self) -> Result<(), ExplainError> {
        match self.constant {
            Some(c) => Err(ExplainError::ConstantClassifier(c)),
            None => Ok(()),
        }
    }

    /// Algorithm for one AXp: greedy deletion from the full feature set.
    pub fn one_axp(&self, order: &Order) -> Result<Explanation, ExplainError> {
        let order = order.resolve(self.num_features())?;
        find_axp(self, self.all_features(), &order)
    }

    pub fn one_cxp(&self, order: &Order) -> Result<Explanation, ExplainError> {
        self.ensure_non_constant()?;
        let order = order.resolve(self.num_features())?;
        find_cxp(self, self.all_features(), &order)
    }

    pub fn find_axp_from_seed(&self, seed: FeatureSet, order: &Order) -> Result<Explanation, ExplainError> {
        let order = order.resolve(self.num_features())?;
        find_axp(self, seed, &order)
    }

    pub fn find_cxp_from_seed(&self, seed: FeatureSet, order: &Order) -> Result<Explanation, ExplainError> {
        let order = order.resolve(self.num_features())?;
        find_cxp(self, seed, &order)
    }

    /// Starts enumerating all AXps and CXps with the given SAT oracle.
    pub fn enumerate<O: Oracle>(&self, oracle: O, order: &Order) -> Result<Enumerator<'_, Self, O>, ExplainError> {
        self.ensure_non_constant()?;
        Enumerator::new(self, oracle, order)
    }
}

impl WeakTest for Explainer<'_> {
    fn num_features(&self) -> usize {
        self.dag.num_features()
    }

    fn is_weak_axp(&self, fixed: &FeatureSet) -> bool {
        let sel = Selector::new(fixed, self.instance.point());
        if self.instance.class() {
            queries::is_valid_under(self.dag, &sel)
        } else {
            !queries::is_consistent_under(self.dag, &sel)
        }
    }

    fn is_weak_cxp(&self, free: &FeatureSet) -> bool {
        let fixed = self.complement(free);
        let sel = Selector::new(&fixed, self.instance.point());
        if self.instance.class() {
            !queries::is_valid_under(self.dag, &sel)
        } else {
            queries::is_consistent_under(self.dag, &sel)
        }
    }
}

pub fn is_weak_axp(dag: &NnfDag, instance: &Instance, fixed: &FeatureSet) -> bool {
    Explainer::new(dag, instance).is_weak_axp(fixed)
}

pub fn is_weak_cxp(dag: &NnfDag, instance: &Instance, free: &FeatureSet) -> bool {
    Explainer::new(dag, instance).is_weak_cxp(free)
}

pub fn one_axp(dag: &NnfDag, instance: &Instance, order: &Order) -> Result<Explanation, ExplainError> {
    Explainer::new(dag, instance).one_axp(order)
}

pub fn one_cxp(dag: &NnfDag, instance: &Instance, order: &Order) -> Result<Explanation, ExplainError> {
    Explainer::new(dag, instance).one_cxp(order)
}

/// Enumeration bookkeeping: the hitting-set formula over `p_1..p_m`
/// (`p_i` true when feature `i` is in the next seed) and what was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationState {
    pub hitting_formula: CnfFormula,
    pub axps: Vec<Explanation>,
    pub cxps: Vec<Explanation>,
    pub exhausted: bool,
    pub oracle_calls: usize,
}

/// One iteration of the enumeration loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub model: Vec<bool>,
    pub seed: FeatureSet,
    pub seed_is_weak_axp: bool,
    pub explanation: Explanation,
    pub block: Vec<Lit>,
}

/// MARCO-style enumeration of all AXps and CXps.
///
/// Each step asks the oracle for a set `S` that contains no recorded AXp and
/// whose complement contains no recorded CXp. Either `S` is a weak AXp, which
/// is shrunk to a new AXp `X` and blocked with `∨_{i∈X} ¬p_i`, or `F∖S` is a
/// weak CXp, shrunk to `Y` and blocked with `∨_{j∈Y} p_j`. An unsatisfiable
/// formula means both families are complete.
pub struct Enumerator<'t, T: WeakTest + ?Sized, O: Oracle> {
    test: &'t T,
    oracle: O,
    order: Vec<Var>,
    state: EnumerationState,
    trace: Vec<TraceStep>,
}

impl<'t, T: WeakTest + ?Sized, O: Oracle> Enumerator<'t, T, O> {
    /// Callers are responsible for the non-constancy precondition.
    pub fn new(test: &'t T, mut oracle: O, order: &Order) -> Result<Self, ExplainError> {
        let m = test.num_features();
        let order = order.resolve(m)?;
        oracle.reset(m);
        Ok(Enumerator {
            test,
            oracle,
            order,
            state: EnumerationState {
                hitting_formula: CnfFormula::new(m),
                axps: Vec::new(),
                cxps: Vec::new(),
                exhausted: false,
                oracle_calls: 0,
            },
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &EnumerationState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    pub fn into_state(self) -> EnumerationState {
        self.state
    }

    fn step(&mut self) -> Result<Option<Explanation>, ExplainError> {
        if self.state.exhausted {
            return Ok(None);
        }
        self.state.oracle_calls += 1;
        let Some(model) = self.oracle.solve()? else {
            self.state.exhausted = true;
            return Ok(None);
        };
        let seed: FeatureSet = model.positives().map(|v| v as Var).collect();
        let seed_is_weak_axp = self.test.is_weak_axp(&seed);
        let (explanation, block): (Explanation, Vec<Lit>) = if seed_is_weak_axp {
            let x = shrink(self.test, Kind::Axp, seed.clone(), &self.order);
            let block = x.iter().map(|&i| -(i as Lit)).collect();
            (Explanation::axp(x), block)
        } else {
            let free = self.test.complement(&seed);
            if !self.test.is_weak_cxp(&free) {
                return Err(ExplainError::SeedDichotomy(model.assignment().to_vec()));
            }
            let y = shrink(self.test, Kind::Cxp, free, &self.order);
            let block = y.iter().map(|&j| j as Lit).collect();
            (Explanation::cxp(y), block)
        };
        self.oracle.add_clause(&block)?;
        self.state.hitting_formula.add_clause(&block)?;
        match explanation.kind {
            Kind::Axp => self.state.axps.push(explanation.clone()),
            Kind::Cxp => self.state.cxps.push(explanation.clone()),
        }
        self.trace.push(TraceStep {
            model: model.assignment().to_vec(),
            seed,
            seed_is_weak_axp,
            explanation: explanation.clone(),
            block,
        });
        Ok(Some(explanation))
    }

    /// Runs to exhaustion, or until `limit` explanations were produced.
    pub fn run(&mut self, limit: Option<usize>) -> Result<Vec<Explanation>, ExplainError> {
        let mut out = Vec::new();
        while limit.is_none_or(|l| out.len() < l) {
            match self.step()? {
                Some(e) => out.push(e),
                None => break,
            }
        }
        Ok(out)
    }
}

impl<T: WeakTest + ?Sized, O: Oracle> Iterator for Enumerator<'_, T, O> {
    type Item = Result<Explanation, ExplainError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.step().transpose()
    }
}

/// Whether `set` intersects every member of `family` and no proper subset
/// of it does.
pub fn is_minimal_hitting_set(set: &FeatureSet, family: &[FeatureSet]) -> bool {
    let hits = |s: &FeatureSet| family.iter().all(|f| !f.is_disjoint(s));
    if !hits(set) {
        return false;
    }
    set.iter().all(|v| {
        let mut smaller = set.clone();
        smaller.remove(v);
        !hits(&smaller)
    })
}

/// Minimal-hitting-set duality: every AXp is a minimal hitting set of the
/// CXps and every CXp is a minimal hitting set of the AXps.
pub fn check_duality(axps: &[FeatureSet], cxps: &[FeatureSet]) -> bool {
    axps.iter().all(|a| is_minimal_hitting_set(a, cxps))
        && cxps.iter().all(|c| is_minimal_hitting_set(c, axps))
}

/// Feature sets of the explanations of one kind.
pub fn feature_sets(explanations: &[Explanation], kind: Kind) -> Vec<FeatureSet> {
    explanations
        .iter()
        .filter(|e| e.kind == kind)
        .map(|e| e.features.clone())
        .collect()
}

pub fn set<const N: usize>(features: [Var; N]) -> FeatureSet {
    BTreeSet::from(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sat::Dpll;

    fn running() -> (NnfDag, Instance) {
        let dag = fixtures::running_example();
        let inst = Instance::new(&dag, vec![false; 4], false).unwrap();
        (dag, inst)
    }

    #[test]
    fn instance_checks_class() {
        let dag = fixtures::running_example();
        assert!(matches!(
            Instance::new(&dag, vec![false; 4], true),
            Err(ExplainError::ClassMismatch { claimed: true, actual: false })
        ));
        assert!(matches!(
            Instance::predicted(&dag, vec![false; 3]),
            Err(ExplainError::Query(QueryError::Arity { .. }))
        ));
    }

    #[test]
    fn weak_axp_examples() {
        let (dag, inst) = running();
        assert!(is_weak_axp(&dag, &inst, &set([1, 2, 3, 4])));
        assert!(is_weak_axp(&dag, &inst, &set([4])));
        assert!(!is_weak_axp(&dag, &inst, &set([])));
        assert!(is_weak_axp(&dag, &inst, &set([1, 2, 3])));
    }

    #[test]
    fn weak_cxp_examples() {
        let (dag, inst) = running();
        assert!(is_weak_cxp(&dag, &inst, &set([3, 4])));
        assert!(is_weak_cxp(&dag, &inst, &set([2, 4])));
        assert!(!is_weak_cxp(&dag, &inst, &set([4])));
        assert!(!is_weak_cxp(&dag, &inst, &set([])));
    }

    #[test]
    fn one_axp_and_cxp() {
        let (dag, inst) = running();
        let rev = Order::Explicit(vec![4, 3, 2, 1]);
        assert_eq!(one_axp(&dag, &inst, &Order::Ascending).unwrap().features, set([4]));
        assert_eq!(one_axp(&dag, &inst, &rev).unwrap().features, set([2, 3]));
        assert_eq!(one_cxp(&dag, &inst, &Order::Ascending).unwrap().features, set([3, 4]));
        assert_eq!(one_cxp(&dag, &inst, &rev).unwrap().features, set([2, 4]));
    }

    #[test]
    fn seeded_variants() {
        let (dag, inst) = running();
        let ex = Explainer::new(&dag, &inst);
        let asc = Order::Ascending;
        assert_eq!(ex.find_axp_from_seed(set([1, 2, 3, 4]), &asc).unwrap().features, set([4]));
        assert_eq!(ex.find_axp_from_seed(set([1, 2, 3]), &asc).unwrap().features, set([2, 3]));
        assert_eq!(ex.find_axp_from_seed(set([4]), &asc).unwrap().features, set([4]));
        assert_eq!(ex.find_cxp_from_seed(set([2, 4]), &asc).unwrap().features, set([2, 4]));
        assert_eq!(ex.find_cxp_from_seed(set([3, 4]), &asc).unwrap().features, set([3, 4]));
        assert_eq!(ex.find_cxp_from_seed(set([1, 2, 3, 4]), &asc).unwrap().features, set([3, 4]));
        assert!(matches!(
            ex.find_axp_from_seed(set([1, 2]), &asc),
            Err(ExplainError::SeedNotWeak { kind: Kind::Axp, .. })
        ));
        assert!(matches!(
            ex.find_cxp_from_seed(set([1]), &asc),
            Err(ExplainError::SeedNotWeak { kind: Kind::Cxp, .. })
        ));
    }

    #[test]
    fn single_feature_classifier() {
        let dag = crate::nnf::parse_c2d("nnf 1 0 1\nL 1").unwrap();
        let inst = Instance::new(&dag, vec![false], false).unwrap();
        assert_eq!(one_cxp(&dag, &inst, &Order::Ascending).unwrap().features, set([1]));
    }

    #[test]
    fn constant_classifier() {
        let dag = NnfDag::constant(true, 3);
        let inst = Instance::new(&dag, vec![true; 3], true).unwrap();
        assert!(one_axp(&dag, &inst, &Order::Ascending).unwrap().features.is_empty());
        assert!(matches!(
            one_cxp(&dag, &inst, &Order::Ascending),
            Err(ExplainError::ConstantClassifier(true))
        ));
        let ex = Explainer::new(&dag, &inst);
        assert!(ex.enumerate(Dpll::new(3), &Order::Ascending).is_err());
    }

    #[test]
    fn bad_orders() {
        assert!(Order::Explicit(vec![1, 2, 2]).resolve(3).is_err());
        assert!(Order::Explicit(vec![1, 2]).resolve(3).is_err());
        let s = Order::Shuffled(9).resolve(10).unwrap();
        assert_eq!(s, Order::Shuffled(9).resolve(10).unwrap());
        let mut sorted = s.clone();
        sorted.sort();
        assert_eq!(sorted, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn enumeration_trace() {
        let (dag, inst) = running();
        let ex = Explainer::new(&dag, &inst);
        let mut en = ex.enumerate(Dpll::new(4), &Order::Ascending).unwrap();
        let all = en.run(None).unwrap();
        assert_eq!(
            all,
            vec![
                Explanation::axp(set([4])),
                Explanation::axp(set([2, 3])),
                Explanation::cxp(set([2, 4])),
                Explanation::cxp(set([3, 4])),
            ]
        );
        let blocks: Vec<_> = en.trace().iter().map(|t| t.block.clone()).collect();
        assert_eq!(blocks, vec![vec![-4], vec![-2, -3], vec![2, 4], vec![3, 4]]);
        assert!(en.state().exhausted);
        assert_eq!(en.state().oracle_calls, 5);
    }

    #[test]
    fn enumeration_limit() {
        let (dag, inst) = running();
        let ex = Explainer::new(&dag, &inst);
        let mut en = ex.enumerate(Dpll::new(4), &Order::Ascending).unwrap();
        assert_eq!(en.run(Some(1)).unwrap().len(), 1);
        assert!(!en.state().exhausted);
        // the iterator picks up where `run` stopped
        assert_eq!(en.by_ref().count(), 3);
        assert!(en.state().exhausted);
    }

    #[test]
    fn duality_examples() {
        let axps = [set([4]), set([2, 3])];
        let cxps = [set([2, 4]), set([3, 4])];
        assert!(check_duality(&axps, &cxps));
        assert!(!check_duality(&axps[..1], &cxps));
        assert!(check_duality(&[], &[]));
    }

    #[test]
    fn record_json() {
        let e = Explanation::axp(set([4]));
        let r = ExplanationRecord::new(&e, &[false; 4], 0);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"kind":"axp","features":[4],"instance":[0,0,0,0],"class":0}"#
        );
    }
}
