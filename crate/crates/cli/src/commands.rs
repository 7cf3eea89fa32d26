use std::io::Write;
use std::time::Instant;

use anyhow::anyhow;
use kcx::explain::{check_duality, feature_sets, Enumerator, ExplainError, Explainer, Instance};
use kcx::gdf::{gdf_predict, GdfExplainer, GdfInstance};
use kcx::oracle::{all_points, brute_force_families, BoundExceeded, FAMILY_LIMIT};
use kcx::sat::Oracle;
use kcx::{Explanation, ExplanationRecord, FeatureSet, Kind, Order};
use serde::Serialize;
use serde_json::json;

use crate::model::{self, Model, Target};
use crate::{parse_order, sink, Common, Explain, Failure, Verify};

/// Largest feature count for which `stats` sweeps every instance.
const STATS_SWEEP_LIMIT: usize = 16;

enum Prepared {
    Circuit(Instance),
    Gdf(GdfInstance),
}

impl Prepared {
    fn new(model: &Model, target: Target) -> Result<Self, Failure> {
        let prepared = match model {
            Model::Circuit(d) => Prepared::Circuit(match target.class {
                Some(c) => Instance::new(d, target.point, c).map_err(Failure::explain)?,
                None => Instance::predicted(d, target.point).map_err(Failure::explain)?,
            }),
            Model::Gdf(g) => {
                let inst = GdfInstance::predicted(g, target.point).map_err(|e| Failure::input(e.into()))?;
                if let Some(c) = target.class {
                    if inst.class() != c as usize {
                        return Err(Failure::input(anyhow!(
                            "CSV class {} differs from the predicted class {}",
                            c as u8,
                            inst.class()
                        )));
                    }
                }
                Prepared::Gdf(inst)
            }
        };
        Ok(prepared)
    }

    fn point(&self) -> &[bool] {
        match self {
            Prepared::Circuit(i) => i.point(),
            Prepared::Gdf(i) => i.point(),
        }
    }

    fn class(&self) -> usize {
        match self {
            Prepared::Circuit(i) => i.class() as usize,
            Prepared::Gdf(i) => i.class(),
        }
    }
}

enum Engine<'a> {
    Circuit(Explainer<'a>),
    Gdf(GdfExplainer<'a>),
}

enum Run<'a> {
    Circuit(Enumerator<'a, Explainer<'a>, Box<dyn Oracle>>),
    Gdf(Enumerator<'a, GdfExplainer<'a>, Box<dyn Oracle>>),
}

impl<'a> Engine<'a> {
    fn new(model: &'a Model, prepared: &'a Prepared) -> Self {
        match (model, prepared) {
            (Model::Circuit(d), Prepared::Circuit(i)) => Engine::Circuit(Explainer::new(d, i)),
            (Model::Gdf(g), Prepared::Gdf(i)) => Engine::Gdf(GdfExplainer::new(g, i)),
            _ => unreachable!("instance prepared for another model kind"),
        }
    }

    fn one(&self, kind: Kind, order: &Order) -> Result<Explanation, ExplainError> {
        match (self, kind) {
            (Engine::Circuit(e), Kind::Axp) => e.one_axp(order),
            (Engine::Circuit(e), Kind::Cxp) => e.one_cxp(order),
            (Engine::Gdf(e), Kind::Axp) => e.one_axp(order),
            (Engine::Gdf(e), Kind::Cxp) => e.one_cxp(order),
        }
    }

    fn enumerate(&'a self, oracle: Box<dyn Oracle>, order: &Order) -> Result<Run<'a>, ExplainError> {
        Ok(match self {
            Engine::Circuit(e) => Run::Circuit(e.enumerate(oracle, order)?),
            Engine::Gdf(e) => Run::Gdf(e.enumerate(oracle, order)?),
        })
    }
}

impl Run<'_> {
    fn next(&mut self) -> Option<Result<Explanation, ExplainError>> {
        match self {
            Run::Circuit(r) => r.next(),
            Run::Gdf(r) => r.next(),
        }
    }

    fn oracle_calls(&self) -> usize {
        match self {
            Run::Circuit(r) => r.state().oracle_calls,
            Run::Gdf(r) => r.state().oracle_calls,
        }
    }

    fn run(&mut self, limit: Option<usize>) -> Result<Vec<Explanation>, Failure> {
        let mut out = Vec::new();
        while limit.is_none_or(|l| out.len() < l) {
            match self.next() {
                Some(e) => out.push(e.map_err(Failure::explain)?),
                None => break,
            }
        }
        Ok(out)
    }
}

fn load(c: &Common) -> Result<Model, Failure> {
    model::load(&c.model, c.format, c.num_features)
}

fn target(e: &Explain, m: usize) -> Result<Option<Target>, Failure> {
    model::read_target(e.instance.as_deref(), e.csv.as_ref(), e.row, m)
}

fn required_target(e: &Explain, m: usize) -> Result<Target, Failure> {
    target(e, m)?.ok_or_else(|| Failure::input(anyhow!("an instance is required (--instance or --csv)")))
}

fn record(model: &Model, prepared: &Prepared, e: &Explanation) -> ExplanationRecord {
    let mut r = ExplanationRecord::new(e, prepared.point(), prepared.class());
    r.label = model.label(prepared.class());
    r
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize, pretty: bool) -> Result<(), Failure> {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("output serializes");
    writeln!(out, "{text}")?;
    Ok(())
}

fn emit_explanation(out: &mut dyn Write, rec: &ExplanationRecord, e: &Explanation, pretty: bool) -> Result<(), Failure> {
    if pretty {
        writeln!(out, "{e}")?;
        Ok(())
    } else {
        emit_json(out, rec, false)
    }
}

pub fn check(c: &Common) -> Result<u8, Failure> {
    let model = load(c)?;
    let report = model.check();
    let mut out = sink(c.output.as_ref())?;
    emit_json(&mut out, &report.to_json(), c.pretty)?;
    out.flush()?;
    Ok(if report.passes() { 0 } else { 3 })
}

pub fn single(e: &Explain, kind: Kind) -> Result<u8, Failure> {
    let model = load(&e.common)?;
    model.ensure_sound()?;
    let order = parse_order(&e.order, e.seed)?;
    let prepared = Prepared::new(&model, required_target(e, model.num_features())?)?;
    let engine = Engine::new(&model, &prepared);
    let x = engine.one(kind, &order).map_err(Failure::explain)?;
    let mut out = sink(e.common.output.as_ref())?;
    emit_explanation(&mut out, &record(&model, &prepared, &x), &x, e.common.pretty)?;
    out.flush()?;
    Ok(0)
}

pub fn enumerate(e: &Explain) -> Result<u8, Failure> {
    let model = load(&e.common)?;
    model.ensure_sound()?;
    let order = parse_order(&e.order, e.seed)?;
    let m = model.num_features();
    let prepared = Prepared::new(&model, required_target(e, m)?)?;
    let engine = Engine::new(&model, &prepared);
    let mut run = engine.enumerate(model::oracle(m)?, &order).map_err(Failure::explain)?;
    let mut out = sink(e.common.output.as_ref())?;
    let (mut axps, mut cxps) = (0, 0);
    while e.limit.is_none_or(|l| axps + cxps < l) {
        let Some(x) = run.next() else { break };
        let x = x.map_err(Failure::explain)?;
        match x.kind {
            Kind::Axp => axps += 1,
            Kind::Cxp => cxps += 1,
        }
        emit_explanation(&mut out, &record(&model, &prepared, &x), &x, e.common.pretty)?;
    }
    let calls = run.oracle_calls();
    if e.common.pretty {
        writeln!(out, "{axps} AXps, {cxps} CXps, {calls} oracle calls")?;
    } else {
        emit_json(&mut out, &json!({"axps": axps, "cxps": cxps, "oracle_calls": calls}), false)?;
    }
    out.flush()?;
    Ok(0)
}

fn sorted(mut v: Vec<FeatureSet>) -> Vec<FeatureSet> {
    v.sort();
    v
}

fn render(kind: Kind, s: &FeatureSet) -> String {
    Explanation {
        kind,
        features: s.clone(),
    }
    .to_string()
}

pub fn verify(v: &Verify) -> Result<u8, Failure> {
    let e = &v.explain;
    let model = load(&e.common)?;
    model.ensure_sound()?;
    let m = model.num_features();
    if m > FAMILY_LIMIT {
        return Err(Failure::bound(BoundExceeded { m, limit: FAMILY_LIMIT }.into()));
    }
    let order = parse_order(&e.order, e.seed)?;
    let prepared = Prepared::new(&model, required_target(e, m)?)?;
    let engine = Engine::new(&model, &prepared);
    let mut run = engine.enumerate(model::oracle(m)?, &order).map_err(Failure::explain)?;
    let mut found = run.run(None)?;
    if v.inject_fault {
        found.pop();
    }

    let class = prepared.class();
    let report = match &model {
        Model::Circuit(d) => brute_force_families(
            |p| kcx::queries::evaluate(d, p).expect("arity checked"),
            prepared.point(),
            class == 1,
        ),
        Model::Gdf(g) => brute_force_families(
            |p| gdf_predict(g, p).is_ok_and(|q| q == class),
            prepared.point(),
            true,
        ),
    }
    .map_err(|b| Failure::bound(b.into()))?;

    let axps = sorted(feature_sets(&found, Kind::Axp));
    let cxps = sorted(feature_sets(&found, Kind::Cxp));
    let mut diff = Vec::new();
    for (kind, got, want) in [
        (Kind::Axp, &axps, sorted(report.axps)),
        (Kind::Cxp, &cxps, sorted(report.cxps)),
    ] {
        for s in want.iter().filter(|s| !got.contains(s)) {
            diff.push(format!("- {}", render(kind, s)));
        }
        for s in got.iter().filter(|s| !want.contains(s)) {
            diff.push(format!("+ {}", render(kind, s)));
        }
    }
    let duality = check_duality(&axps, &cxps);
    let ok = diff.is_empty() && duality;

    let mut out = sink(e.common.output.as_ref())?;
    if e.common.pretty {
        writeln!(out, "{}", if ok { "families match" } else { "MISMATCH" })?;
        for d in &diff {
            writeln!(out, "{d}")?;
        }
        writeln!(out, "duality: {}", if duality { "holds" } else { "fails" })?;
    } else {
        emit_json(
            &mut out,
            &json!({
                "match": ok,
                "axps": axps.len(),
                "cxps": cxps.len(),
                "oracle_calls": run.oracle_calls(),
                "duality": duality,
                "diff": diff,
            }),
            false,
        )?;
    }
    out.flush()?;
    Ok(if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct InstanceStats {
    instance: Vec<u8>,
    class: usize,
    axps: usize,
    cxps: usize,
    oracle_calls: usize,
    mean_axp_len: f64,
    mean_cxp_len: f64,
    seconds: f64,
}

fn mean(total: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / n as f64
    }
}

pub fn stats(e: &Explain) -> Result<u8, Failure> {
    let model = load(&e.common)?;
    model.ensure_sound()?;
    let m = model.num_features();
    let order = parse_order(&e.order, e.seed)?;
    let targets: Vec<Target> = match target(e, m)? {
        Some(t) => vec![t],
        None if m <= STATS_SWEEP_LIMIT => all_points(m).map(|point| Target { point, class: None }).collect(),
        None => {
            return Err(Failure::bound(anyhow!(
                "sweeping all instances of {m} features exceeds the limit of {STATS_SWEEP_LIMIT}; pass --instance"
            )))
        }
    };

    let mut rows = Vec::with_capacity(targets.len());
    let (mut axp_len, mut cxp_len) = (0, 0);
    for t in targets {
        let prepared = Prepared::new(&model, t)?;
        let engine = Engine::new(&model, &prepared);
        let oracle = model::oracle(m)?;
        let start = Instant::now();
        let mut run = engine.enumerate(oracle, &order).map_err(Failure::explain)?;
        let found = run.run(e.limit)?;
        let seconds = start.elapsed().as_secs_f64();
        let lens = |k: Kind| -> (usize, usize) {
            let s = feature_sets(&found, k);
            (s.len(), s.iter().map(|x| x.len()).sum())
        };
        let (na, la) = lens(Kind::Axp);
        let (nc, lc) = lens(Kind::Cxp);
        axp_len += la;
        cxp_len += lc;
        rows.push(InstanceStats {
            instance: prepared.point().iter().map(|&b| b as u8).collect(),
            class: prepared.class(),
            axps: na,
            cxps: nc,
            oracle_calls: run.oracle_calls(),
            mean_axp_len: mean(la, na),
            mean_cxp_len: mean(lc, nc),
            seconds,
        });
    }

    let n = rows.len();
    let total_axps: usize = rows.iter().map(|r| r.axps).sum();
    let total_cxps: usize = rows.iter().map(|r| r.cxps).sum();
    let total_seconds: f64 = rows.iter().map(|r| r.seconds).sum();
    let max_seconds = rows.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let summary = json!({
        "instances": n,
        "mean_explanations": mean(total_axps + total_cxps, n),
        "mean_axps": mean(total_axps, n),
        "mean_cxps": mean(total_cxps, n),
        "mean_axp_len": mean(axp_len, total_axps),
        "mean_cxp_len": mean(cxp_len, total_cxps),
        "mean_explanation_len": mean(axp_len + cxp_len, total_axps + total_cxps),
        "total_seconds": total_seconds,
        "max_seconds": max_seconds,
    });

    let mut out = sink(e.common.output.as_ref())?;
    if e.common.pretty {
        writeln!(out, "nodes {}  edges {}  features {m}", model.nodes(), model.edges())?;
        for r in &rows {
            let point: String = r.instance.iter().map(u8::to_string).collect();
            writeln!(
                out,
                "{point}  class {}  AXps {:>3}  CXps {:>3}  {:.6}s",
                r.class, r.axps, r.cxps, r.seconds
            )?;
        }
        writeln!(
            out,
            "{n} instances, {:.2} explanations each, mean length {:.2}, {:.6}s total",
            mean(total_axps + total_cxps, n),
            mean(axp_len + cxp_len, total_axps + total_cxps),
            total_seconds
        )?;
    } else {
        emit_json(
            &mut out,
            &json!({
                "nodes": model.nodes(),
                "edges": model.edges(),
                "features": m,
                "per_instance": rows,
                "summary": summary,
            }),
            false,
        )?;
    }
    out.flush()?;
    Ok(0)
}
