use kcx::explain::{check_duality, feature_sets, Explainer, Instance, Kind, Order, WeakTest};
use kcx::gdf::{gdf_enumerate, validate_gdf, Gdf, GdfInstance, ValidationMode};
use kcx::gen::{random_decision_dnnf, random_dnnf, random_rodt};
use kcx::nnf::{check_structure, parse_c2d, smooth, to_c2d, NnfDag};
use kcx::oracle::{all_points, brute_force_families, brute_force_weak_axp, brute_force_weak_cxp, point_from_index};
use kcx::queries::{self, count_models, Selector, Term};
use kcx::sat::{Branching, CnfFormula, Dpll, Oracle, OracleModel};
use kcx::{from_decision_tree, DecisionTree, FeatureSet};
use num_bigint::BigUint;
use proptest::prelude::*;

fn eval(dag: &NnfDag) -> impl Fn(&[bool]) -> bool + '_ {
    move |p| queries::evaluate(dag, p).unwrap()
}

fn same_function(a: &NnfDag, b: &NnfDag) -> bool {
    all_points(a.num_features()).all(|p| eval(a)(&p) == eval(b)(&p))
}

fn term_strategy(m: usize) -> impl Strategy<Value = Term> {
    proptest::collection::vec(proptest::option::of(any::<bool>()), m).prop_map(|vals| {
        Term::from_pairs(
            vals.into_iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|b| (i as u32 + 1, b))),
        )
        .unwrap()
    })
}

fn negate(t: &DecisionTree) -> DecisionTree {
    match t {
        DecisionTree::Leaf { leaf } => DecisionTree::leaf(*leaf == 0),
        DecisionTree::Node { var, lo, hi } => DecisionTree::node(*var, negate(lo), negate(hi)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn queries_match_truth_table(m in 1usize..=9, seed in any::<u64>()) {
        let dag = random_decision_dnnf(m, seed);
        let table: Vec<bool> = all_points(m).map(|p| eval(&dag)(&p)).collect();
        let models = table.iter().filter(|&&b| b).count();
        prop_assert_eq!(queries::is_consistent(&dag), models > 0);
        prop_assert_eq!(queries::is_valid(&dag, m).unwrap(), models == table.len());
        prop_assert_eq!(count_models(&dag).scaled_to(m), BigUint::from(models));
    }

    #[test]
    fn consistency_is_exact_without_determinism(m in 1usize..=9, seed in any::<u64>()) {
        let dag = random_dnnf(m, seed);
        prop_assert!(check_structure(&dag).decomposable);
        let any_model = all_points(m).any(|p| eval(&dag)(&p));
        prop_assert_eq!(queries::is_consistent(&dag), any_model);
    }

    #[test]
    fn smoothing_preserves_semantics_and_is_idempotent(m in 1usize..=8, seed in any::<u64>()) {
        let dag = random_decision_dnnf(m, seed);
        let s = smooth(&dag);
        let report = check_structure(&s);
        prop_assert!(report.smooth);
        prop_assert!(report.is_d_dnnf());
        prop_assert!(same_function(&dag, &s));
        prop_assert_eq!(count_models(&s).scaled_to(m), count_models(&dag).scaled_to(m));
        let twice = smooth(&s);
        prop_assert_eq!(to_c2d(&twice), to_c2d(&s));
    }

    #[test]
    fn c2d_round_trip(m in 1usize..=8, seed in any::<u64>()) {
        let dag = random_decision_dnnf(m, seed);
        let text = to_c2d(&dag);
        let back = parse_c2d(&text).unwrap();
        prop_assert_eq!(to_c2d(&back), text);
        prop_assert!(same_function(&dag, &back));
        prop_assert_eq!(check_structure(&back), check_structure(&dag));
    }

    #[test]
    fn conditioning_composes(
        seed in any::<u64>(),
        (t1, t2) in (term_strategy(7), term_strategy(7)),
    ) {
        let dag = random_decision_dnnf(7, seed);
        prop_assume!(t1.union(&t2).is_ok());
        let both = t1.union(&t2).unwrap();
        let stepwise = queries::condition(&queries::condition(&dag, &t1), &t2);
        let at_once = queries::condition(&dag, &both);
        prop_assert!(same_function(&stepwise, &at_once));
        // conditioning agrees with substitution
        for p in all_points(7) {
            let mut q = p.clone();
            for (v, b) in both.iter() {
                q[v as usize - 1] = b;
            }
            prop_assert_eq!(eval(&at_once)(&p), eval(&dag)(&q));
        }
        // the result mentions no conditioned variable and stays d-DNNF
        prop_assert!(both.iter().all(|(v, _)| !at_once.vars().contains(v)));
        prop_assert!(check_structure(&at_once).is_d_dnnf());
    }

    #[test]
    fn fused_conditioned_queries_match_materialized(
        m in 1usize..=9,
        seed in any::<u64>(),
        k in any::<u64>(),
        mask in any::<u16>(),
    ) {
        let dag = random_decision_dnnf(m, seed);
        let point = point_from_index(k % (1 << m), m);
        let fixed: FeatureSet = (1..=m as u32).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let sel = Selector::new(&fixed, &point);
        let delta = queries::condition_selector(&dag, &sel);
        prop_assert_eq!(queries::is_consistent_under(&dag, &sel), queries::is_consistent(&delta));
        prop_assert_eq!(
            queries::is_valid_under(&dag, &sel),
            queries::is_valid(&delta, m - fixed.len()).unwrap()
        );
        // and both agree with substitution over every completion
        let completions: Vec<bool> = all_points(m)
            .filter(|p| fixed.iter().all(|&i| p[i as usize - 1] == point[i as usize - 1]))
            .map(|p| eval(&dag)(&p))
            .collect();
        prop_assert_eq!(queries::is_consistent_under(&dag, &sel), completions.iter().any(|&b| b));
        prop_assert_eq!(queries::is_valid_under(&dag, &sel), completions.iter().all(|&b| b));
    }

    #[test]
    fn dpll_is_sound_and_complete(
        n in 1usize..=8,
        clauses in proptest::collection::vec(proptest::collection::vec((1i32..=8, any::<bool>()), 0..4), 0..14),
        descending in any::<bool>(),
    ) {
        let mut f = CnfFormula::new(n);
        for c in &clauses {
            let lits: Vec<i32> = c
                .iter()
                .map(|&(v, pos)| {
                    let v = (v - 1) % n as i32 + 1;
                    if pos { v } else { -v }
                })
                .collect();
            f.add_clause(&lits).unwrap();
        }
        let branching = if descending { Branching::Descending } else { Branching::Ascending };
        let mut solver = Dpll::with_branching(n, branching);
        for c in f.clauses() {
            solver.add_clause(c).unwrap();
        }
        let truth = (0..1u64 << n)
            .map(|k| OracleModel::new(point_from_index(k, n)))
            .find(|m| f.is_satisfied_by(m));
        match solver.solve().unwrap() {
            Some(model) => prop_assert!(f.is_satisfied_by(&model)),
            None => prop_assert!(truth.is_none()),
        }
    }

    #[test]
    fn enumeration_matches_oracle(m in 2usize..=8, seed in any::<u64>(), k in any::<u64>(), order_seed in any::<u64>()) {
        let dag = random_decision_dnnf(m, seed);
        let point = point_from_index(k % (1 << m), m);
        let inst = Instance::predicted(&dag, point.clone()).unwrap();
        let ex = Explainer::new(&dag, &inst);
        prop_assume!(ex.constant().is_none());
        let order = Order::Shuffled(order_seed);
        let mut en = ex.enumerate(Dpll::new(m), &order).unwrap();
        let found = en.run(None).unwrap();
        prop_assert_eq!(en.state().oracle_calls, found.len() + 1);
        // every oracle model induced a seed on exactly one side
        for step in en.trace() {
            let free = ex.complement(&step.seed);
            prop_assert_ne!(ex.is_weak_axp(&step.seed), ex.is_weak_cxp(&free));
        }
        let mut axps = feature_sets(&found, Kind::Axp);
        let mut cxps = feature_sets(&found, Kind::Cxp);
        prop_assert!(check_duality(&axps, &cxps));
        let report = brute_force_families(eval(&dag), &point, inst.class()).unwrap();
        axps.sort();
        cxps.sort();
        let (mut want_a, mut want_c) = (report.axps, report.cxps);
        want_a.sort();
        want_c.sort();
        prop_assert_eq!(axps, want_a);
        prop_assert_eq!(cxps, want_c);
    }

    #[test]
    fn single_explanations_are_minimal(m in 1usize..=8, seed in any::<u64>(), k in any::<u64>(), order_seed in any::<u64>()) {
        let tree = random_rodt(m, m, seed);
        let dag = from_decision_tree(&tree, m).unwrap();
        let point = point_from_index(k % (1 << m), m);
        let inst = Instance::predicted(&dag, point.clone()).unwrap();
        let c = inst.class();
        prop_assert_eq!(c, tree.evaluate(&point));
        let ex = Explainer::new(&dag, &inst);
        let order = Order::Shuffled(order_seed);
        let axp = ex.one_axp(&order).unwrap().features;
        let cxp = ex.one_cxp(&order).unwrap().features;
        let e = |p: &[bool]| tree.evaluate(p);
        prop_assert!(brute_force_weak_axp(e, &point, c, &axp).unwrap());
        prop_assert!(brute_force_weak_cxp(e, &point, c, &cxp).unwrap());
        for v in &axp {
            let mut s: FeatureSet = axp.clone();
            s.remove(v);
            prop_assert!(!brute_force_weak_axp(e, &point, c, &s).unwrap());
        }
        for v in &cxp {
            let mut s: FeatureSet = cxp.clone();
            s.remove(v);
            prop_assert!(!brute_force_weak_cxp(e, &point, c, &s).unwrap());
        }
        // an AXp and a CXp always intersect
        prop_assert!(!axp.is_disjoint(&cxp));
    }

    #[test]
    fn gdf_of_tree_and_its_negation_agrees_with_single_circuit(m in 2usize..=7, seed in any::<u64>(), k in any::<u64>()) {
        let tree = random_rodt(m, m, seed);
        let pos = from_decision_tree(&tree, m).unwrap();
        let neg = from_decision_tree(&negate(&tree), m).unwrap();
        let g = Gdf::new(vec!["0".into(), "1".into()], vec![neg, pos.clone()]).unwrap();
        prop_assert!(validate_gdf(&g, ValidationMode::default()).unwrap().is_valid());
        let point = point_from_index(k % (1 << m), m);
        let gi = GdfInstance::predicted(&g, point.clone()).unwrap();
        let inst = Instance::predicted(&pos, point).unwrap();
        prop_assert_eq!(gi.class() == 1, inst.class());
        let (from_gdf, calls) = gdf_enumerate(&g, &gi, Dpll::new(m), &Order::Ascending, None).unwrap();
        let ex = Explainer::new(&pos, &inst);
        let mut en = ex.enumerate(Dpll::new(m), &Order::Ascending).unwrap();
        let direct = en.run(None).unwrap();
        prop_assert_eq!(from_gdf, direct);
        prop_assert_eq!(calls, en.state().oracle_calls);
    }
}
