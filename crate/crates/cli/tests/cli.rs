use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kcx::gen::random_rodt;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn kcx(args: &[&str]) -> Output {
    kcx_env(args, None)
}

fn kcx_env(args: &[&str], oracle: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kcx"));
    cmd.args(args);
    match oracle {
        Some(o) => cmd.env("KCX_ORACLE", o),
        None => cmd.env_remove("KCX_ORACLE"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

fn running() -> String {
    data("running_example.nnf").display().to_string()
}

#[test]
fn check_reports_structure_and_exit_codes() {
    let out = kcx(&["check", "--model", &running()]);
    assert_eq!(code(&out), 0);
    let r = &lines(&out)[0];
    assert_eq!(r["decomposable"], true);
    assert_eq!(r["decision_deterministic"], true);

    let shared = data("shared_var.nnf").display().to_string();
    let out = kcx(&["check", "--model", &shared]);
    assert_eq!(code(&out), 3);
    assert_eq!(lines(&out)[0]["decomposable"], false);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.nnf");
    fs::write(&bad, "nnf 2 1 2\nL 1\nA 1 5\n").unwrap();
    let out = kcx(&["check", "--model", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn axp_and_cxp() {
    let out = kcx(&["axp", "--model", &running(), "--instance", "0,0,0,0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        lines(&out)[0],
        serde_json::json!({"kind": "axp", "features": [4], "instance": [0, 0, 0, 0], "class": 0})
    );
    let out = kcx(&["cxp", "--model", &running(), "--instance", "0,0,0,0"]);
    assert_eq!(lines(&out)[0]["features"], serde_json::json!([3, 4]));
    let out = kcx(&["cxp", "--model", &running(), "--instance", "0,0,0,0", "--order", "4,3,2,1"]);
    assert_eq!(lines(&out)[0]["features"], serde_json::json!([2, 4]));
}

#[test]
fn input_errors() {
    // arity mismatch
    assert_eq!(code(&kcx(&["axp", "--model", &running(), "--instance", "0,0,0"])), 2);
    // missing instance
    assert_eq!(code(&kcx(&["axp", "--model", &running()])), 2);
    // bad order
    assert_eq!(code(&kcx(&["axp", "--model", &running(), "--instance", "0000", "--order", "1,2"])), 2);
    // SDD needs a feature count
    let sdd = data("running_example.sdd").display().to_string();
    assert_eq!(code(&kcx(&["check", "--model", &sdd])), 2);
    // structure failure blocks explanation
    let shared = data("shared_var.nnf").display().to_string();
    assert_eq!(code(&kcx(&["axp", "--model", &shared, "--instance", "1"])), 3);
}

#[test]
fn constant_classifier_is_refused_for_contrastive_output() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("true.nnf");
    fs::write(&t, "nnf 1 0 3\nA 0\n").unwrap();
    let t = t.to_str().unwrap();
    assert_eq!(code(&kcx(&["cxp", "--model", t, "--instance", "010"])), 5);
    assert_eq!(code(&kcx(&["enumerate", "--model", t, "--instance", "010"])), 5);
    // the empty set is the only AXp of a constant function
    let out = kcx(&["axp", "--model", t, "--instance", "010"]);
    assert_eq!(code(&out), 0);
    assert_eq!(lines(&out)[0]["features"], serde_json::json!([]));
}

fn expected_enumeration() -> Vec<Value> {
    let rec = |kind: &str, f: &[u32]| {
        serde_json::json!({"kind": kind, "features": f, "instance": [0, 0, 0, 0], "class": 0})
    };
    vec![
        rec("axp", &[4]),
        rec("axp", &[2, 3]),
        rec("cxp", &[2, 4]),
        rec("cxp", &[3, 4]),
        serde_json::json!({"axps": 2, "cxps": 2, "oracle_calls": 5}),
    ]
}

#[test]
fn enumerate_streams_explanations_and_summary() {
    let out = kcx(&["enumerate", "--model", &running(), "--instance", "0,0,0,0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(lines(&out), expected_enumeration());

    let out = kcx(&["enumerate", "--model", &running(), "--instance", "0000", "--limit", "1"]);
    let l = lines(&out);
    assert_eq!(l.len(), 2);
    assert_eq!(l[1], serde_json::json!({"axps": 1, "cxps": 0, "oracle_calls": 1}));
}

#[test]
fn sdd_tree_and_gdf_inputs() {
    let sdd = data("running_example.sdd").display().to_string();
    let out = kcx(&["enumerate", "--model", &sdd, "--num-features", "4", "--instance", "0000"]);
    assert_eq!(lines(&out), expected_enumeration());

    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("k.json");
    // x4 ∧ (x3 ∨ x2)
    fs::write(
        &tree,
        r#"{"var": 4, "lo": {"leaf": 0},
            "hi": {"var": 3, "lo": {"var": 2, "lo": {"leaf": 0}, "hi": {"leaf": 1}}, "hi": {"leaf": 1}}}"#,
    )
    .unwrap();
    let out = kcx(&["enumerate", "--model", tree.to_str().unwrap(), "--format", "tree", "--instance", "0000"]);
    let l = lines(&out);
    assert_eq!(l.last().unwrap(), &serde_json::json!({"axps": 2, "cxps": 2, "oracle_calls": 5}));

    let gdf = data("running_gdf.json").display().to_string();
    let out = kcx(&["enumerate", "--model", &gdf, "--format", "gdf", "--instance", "0000"]);
    let l = lines(&out);
    assert_eq!(l[0]["label"], "negative");
    assert_eq!(l[4], serde_json::json!({"axps": 2, "cxps": 2, "oracle_calls": 5}));
    let out = kcx(&["check", "--model", &gdf, "--format", "gdf"]);
    assert_eq!(code(&out), 0);
    assert_eq!(lines(&out)[0]["binding"], true);
}

#[test]
fn overlapping_gdf_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(data("running_example.nnf"), dir.path().join("k.nnf")).unwrap();
    let manifest = dir.path().join("g.json");
    fs::write(&manifest, r#"{"classes": ["a", "b"], "circuits": ["k.nnf", "k.nnf"]}"#).unwrap();
    let out = kcx(&["check", "--model", manifest.to_str().unwrap(), "--format", "gdf"]);
    assert_eq!(code(&out), 3);
    let r = &lines(&out)[0];
    assert_eq!(r["non_overlapping"], false);
    assert_eq!(r["counterexample"], serde_json::json!([0, 0, 0, 0]));
}

#[test]
fn csv_instances() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    fs::write(&csv, "a,b,c,d,y\n0,0,0,0,0\n0,0,1,1,1\n0,0,1,1,0\n").unwrap();
    let csv = csv.to_str().unwrap();
    let out = kcx(&["axp", "--model", &running(), "--csv", csv, "--row", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(lines(&out)[0]["class"], 1);
    // the recorded class disagrees with the model
    assert_eq!(code(&kcx(&["axp", "--model", &running(), "--csv", csv, "--row", "2"])), 2);
    assert_eq!(code(&kcx(&["axp", "--model", &running(), "--csv", csv, "--row", "9"])), 2);
}

#[test]
fn verify_matches_and_detects_faults() {
    let out = kcx(&["verify", "--model", &running(), "--instance", "0000"]);
    assert_eq!(code(&out), 0);
    assert_eq!(lines(&out)[0]["match"], true);

    let out = kcx(&["verify", "--model", &running(), "--instance", "0000", "--inject-fault"]);
    assert_eq!(code(&out), 1);
    let r = &lines(&out)[0];
    assert_eq!(r["match"], false);
    assert_eq!(r["diff"], serde_json::json!(["- CXp {3,4}"]));

    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("seed7.json");
    fs::write(&tree, random_rodt(10, 6, 7).to_json()).unwrap();
    let tree = tree.to_str().unwrap();
    for point in ["0000000000", "1111111111", "0101010101"] {
        let out = kcx(&["verify", "--model", tree, "--format", "tree", "--num-features", "10", "--instance", point]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }

    let wide = dir.path().join("wide.nnf");
    fs::write(&wide, "nnf 1 0 13\nL 13\n").unwrap();
    let out = kcx(&["verify", "--model", wide.to_str().unwrap(), "--instance", "0000000000001"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn stats_over_all_instances() {
    let out = kcx(&["stats", "--model", &running()]);
    assert_eq!(code(&out), 0);
    let s = &lines(&out)[0];
    assert_eq!(s["nodes"], 12);
    assert_eq!(s["edges"], 12);
    assert_eq!(s["features"], 4);
    let rows = s["per_instance"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0]["axps"], 2);
    assert_eq!(rows[0]["cxps"], 2);
    // 46 explanations over 16 points, computed by exhaustive search
    let total: u64 = rows
        .iter()
        .map(|r| r["axps"].as_u64().unwrap() + r["cxps"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 46);
    assert_eq!(s["summary"]["mean_explanations"], 46.0 / 16.0);
    assert!(rows.iter().all(|r| r["seconds"].as_f64().unwrap() >= 0.0));
    assert!(s["summary"]["total_seconds"].as_f64().unwrap() >= 0.0);

    let one = kcx(&["stats", "--model", &running(), "--instance", "0000"]);
    assert_eq!(lines(&one)[0]["summary"]["mean_explanations"], 4.0);
}

#[test]
fn output_file_and_shuffled_order_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = kcx(&[
            "enumerate", "--model", &running(), "--instance", "1111", "--order", "shuffled", "--seed", "3",
            "--output", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty());
        fs::read_to_string(path).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

const BRUTE_FORCE_SOLVER: &str = r#"import itertools, sys
lines = [l.split() for l in open(sys.argv[1]) if l.strip() and not l.startswith('c')]
n = int(lines[0][2])
clauses = [[int(t) for t in l if t != '0'] for l in lines[1:]]
for rev in itertools.product([1, 0], repeat=n):
    bits = rev[::-1]
    if all(any((lit > 0) == bool(bits[abs(lit) - 1]) for lit in c) for c in clauses):
        print('s SATISFIABLE')
        print('v ' + ' '.join(str(i + 1 if b else -(i + 1)) for i, b in enumerate(bits)) + ' 0')
        sys.exit(10)
print('s UNSATISFIABLE')
sys.exit(20)
"#;

#[test]
fn external_dimacs_oracle() {
    if Command::new("python3").arg("--version").output().is_err() {
        eprintln!("python3 unavailable; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("solver.py");
    fs::write(&script, BRUTE_FORCE_SOLVER).unwrap();
    let wrapper = dir.path().join("solver.sh");
    fs::write(&wrapper, format!("#!/bin/sh\nexec python3 {} \"$@\"\n", script.display())).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&wrapper, fs::Permissions::from_mode(0o755)).unwrap();
    }
    let oracle = format!("dimacs:{}", wrapper.display());
    let out = kcx_env(&["enumerate", "--model", &running(), "--instance", "0000"], Some(&oracle));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let l = lines(&out);
    // the solver returns the lexicographically largest model with x_n most
    // significant, the same one the built-in search finds
    assert_eq!(l, expected_enumeration());

    let out = kcx_env(&["enumerate", "--model", &running(), "--instance", "0000"], Some("nonsense"));
    assert_eq!(code(&out), 2);
}
