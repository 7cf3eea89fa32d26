//! Seeded random models for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nnf::{NnfBuilder, NnfDag, NodeId, OrTag, Var, VarSet};
use crate::tree::DecisionTree;

/// A random read-once decision tree over features `1..=m`, at most `depth`
/// deep. The same seed always yields the same tree. Constant trees are
/// rejected and redrawn; `depth` is clamped to `1..=m` so that a
/// non-constant tree exists.
pub fn random_rodt(m: usize, depth: usize, seed: u64) -> DecisionTree {
    assert!(m >= 1, "need at least one feature");
    let depth = depth.clamp(1, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut avail: Vec<Var> = (1..=m as Var).collect();
        let t = grow(&mut rng, &mut avail, 0, depth);
        if t.has_both_leaves() {
            return t;
        }
    }
}

fn grow(rng: &mut ChaCha8Rng, avail: &mut Vec<Var>, level: usize, depth: usize) -> DecisionTree {
    if level == depth || (level > 0 && rng.gen_bool(0.2)) {
        return DecisionTree::leaf(rng.gen());
    }
    let i = rng.gen_range(0..avail.len());
    let var = avail.swap_remove(i);
    let lo = grow(rng, &mut avail.clone(), level + 1, depth);
    let hi = grow(rng, &mut avail.clone(), level + 1, depth);
    avail.push(var);
    let last = avail.len() - 1;
    avail.swap(i, last);
    DecisionTree::node(var, lo, hi)
}

struct DagGen {
    rng: ChaCha8Rng,
    b: NnfBuilder,
    deterministic: bool,
}

impl DagGen {
    fn reuse(&mut self, allowed: &VarSet) -> Option<NodeId> {
        let n = self.b.len();
        if n == 0 {
            return None;
        }
        for _ in 0..4 {
            let id = NodeId::new(self.rng.gen_range(0..n));
            if self.b.var_set(id).difference(allowed).is_empty() {
                return Some(id);
            }
        }
        None
    }

    fn build(&mut self, vars: &[Var], budget: usize) -> NodeId {
        let allowed: VarSet = vars.iter().copied().collect();
        let roll = self.rng.gen_range(0..100);
        if vars.is_empty() || budget == 0 || roll < 8 {
            if !vars.is_empty() && self.rng.gen_bool(0.85) {
                let v = *vars.choose(&mut self.rng).unwrap();
                let pos = self.rng.gen();
                return self.b.literal(v, pos).unwrap();
            }
            let c = self.rng.gen_bool(0.6);
            return self.b.constant(c);
        }
        if roll < 20 {
            if let Some(id) = self.reuse(&allowed) {
                return id;
            }
        }
        if roll < 50 && vars.len() >= 2 {
            // decomposable conjunction over a random partition
            let mut shuffled = vars.to_vec();
            shuffled.shuffle(&mut self.rng);
            let parts = self.rng.gen_range(2..=3.min(shuffled.len()));
            let mut cuts: Vec<usize> = (1..shuffled.len()).collect();
            cuts.shuffle(&mut self.rng);
            let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
            cuts.sort_unstable();
            let mut kids = Vec::new();
            let mut start = 0;
            for end in cuts.into_iter().chain([shuffled.len()]) {
                kids.push(self.build(&shuffled[start..end], budget - 1));
                start = end;
            }
            return self.b.and(kids).unwrap();
        }
        let x = *vars.choose(&mut self.rng).unwrap();
        let rest: Vec<Var> = vars.iter().copied().filter(|&v| v != x).collect();
        if self.deterministic {
            let s = subset(&mut self.rng, &rest);
            let lo = self.build(&s, budget - 1);
            let s = subset(&mut self.rng, &rest);
            let hi = self.build(&s, budget - 1);
            let n = self.b.literal(x, false).unwrap();
            let p = self.b.literal(x, true).unwrap();
            let a = self.b.and(vec![n, lo]).unwrap();
            let c = self.b.and(vec![p, hi]).unwrap();
            self.b.or(vec![a, c], OrTag::Decision(x)).unwrap()
        } else {
            let k = self.rng.gen_range(2..=3);
            let kids = (0..k)
                .map(|_| {
                    let s = subset(&mut self.rng, vars);
                    self.build(&s, budget - 1)
                })
                .collect();
            self.b.or(kids, OrTag::Plain).unwrap()
        }
    }
}

fn subset(rng: &mut ChaCha8Rng, vars: &[Var]) -> Vec<Var> {
    vars.iter().copied().filter(|_| rng.gen_bool(0.8)).collect()
}

fn random_dag(m: usize, seed: u64, deterministic: bool) -> NnfDag {
    let mut g = DagGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        b: NnfBuilder::new(m),
        deterministic,
    };
    let vars: Vec<Var> = (1..=m as Var).collect();
    let root = g.build(&vars, 7);
    g.b.build_reachable(root)
}

/// A random decision-DNNF over `1..=m` with node sharing: every OR is a
/// decision node, every AND is decomposable.
pub fn random_decision_dnnf(m: usize, seed: u64) -> NnfDag {
    random_dag(m, seed, true)
}

/// A random DNNF whose ORs carry no determinism guarantee.
pub fn random_dnnf(m: usize, seed: u64) -> NnfDag {
    random_dag(m, seed, false)
}
