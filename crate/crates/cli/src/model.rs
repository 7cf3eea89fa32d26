use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use kcx::dataset::Dataset;
use kcx::gdf::{load_gdf, validate_gdf, Gdf, ValidationMode, DEFAULT_VALIDATION_BOUND};
use kcx::nnf::{check_structure, parse_c2d, parse_sdd, NnfDag, StructuralReport};
use kcx::sat::{DimacsOracle, Dpll, Oracle};
use kcx::{from_decision_tree, DecisionTree};
use serde::Serialize;

use crate::{Failure, Format};

pub enum Model {
    Circuit(NnfDag),
    Gdf(Gdf),
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)
}

fn infer_format(path: &Path) -> Result<Format, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("nnf") => Ok(Format::Nnf),
        Some("sdd") => Ok(Format::Sdd),
        _ => Err(Failure::input(anyhow::anyhow!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}

pub fn load(path: &Path, format: Option<Format>, num_features: Option<usize>) -> Result<Model, Failure> {
    let format = match format {
        Some(f) => f,
        None => infer_format(path)?,
    };
    let widen = |dag: NnfDag| -> Result<NnfDag, Failure> {
        match num_features {
            Some(m) => dag.with_num_features(m).map_err(|e| Failure::input(e.into())),
            None => Ok(dag),
        }
    };
    let ctx = |e: anyhow::Error| Failure::input(e.context(format!("cannot parse {}", path.display())));
    match format {
        Format::Nnf => widen(parse_c2d(&read(path)?).map_err(|e| ctx(e.into()))?).map(Model::Circuit),
        Format::Sdd => {
            let Some(m) = num_features else {
                return Err(Failure::input(anyhow::anyhow!("--num-features is required for SDD input")));
            };
            Ok(Model::Circuit(parse_sdd(&read(path)?, m).map_err(|e| ctx(e.into()))?))
        }
        Format::Tree => {
            let tree = DecisionTree::from_json(&read(path)?).map_err(|e| ctx(e.into()))?;
            let m = num_features.unwrap_or(tree.max_var() as usize);
            Ok(Model::Circuit(from_decision_tree(&tree, m).map_err(|e| ctx(e.into()))?))
        }
        Format::Gdf => {
            let g = load_gdf(path).map_err(|e| ctx(e.into()))?;
            if let Some(m) = num_features {
                if m != g.num_features() {
                    return Err(Failure::input(anyhow::anyhow!(
                        "--num-features {m} disagrees with the GDF's {} features",
                        g.num_features()
                    )));
                }
            }
            Ok(Model::Gdf(g))
        }
    }
}

#[derive(Serialize)]
pub struct GdfCheck {
    pub circuits: Vec<StructuralReport>,
    pub binding: Option<bool>,
    pub non_overlapping: Option<bool>,
    pub counterexample: Option<Vec<u8>>,
}

pub enum CheckReport {
    Circuit(StructuralReport),
    Gdf(GdfCheck),
}

impl CheckReport {
    pub fn passes(&self) -> bool {
        match self {
            CheckReport::Circuit(r) => r.decomposable && r.decision_deterministic,
            CheckReport::Gdf(g) => {
                g.circuits.iter().all(|r| r.decomposable)
                    && g.binding != Some(false)
                    && g.non_overlapping != Some(false)
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CheckReport::Circuit(r) => serde_json::to_value(r),
            CheckReport::Gdf(g) => serde_json::to_value(g),
        }
        .expect("reports serialize")
    }
}

impl Model {
    pub fn num_features(&self) -> usize {
        match self {
            Model::Circuit(d) => d.num_features(),
            Model::Gdf(g) => g.num_features(),
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            Model::Circuit(d) => d.len(),
            Model::Gdf(g) => g.functions().iter().map(NnfDag::len).sum(),
        }
    }

    pub fn edges(&self) -> usize {
        match self {
            Model::Circuit(d) => d.edge_count(),
            Model::Gdf(g) => g.functions().iter().map(NnfDag::edge_count).sum(),
        }
    }

    /// Structural check. A GDF is additionally checked for being binding
    /// and non-overlapping when its feature count allows brute force.
    pub fn check(&self) -> CheckReport {
        match self {
            Model::Circuit(d) => CheckReport::Circuit(check_structure(d)),
            Model::Gdf(g) => {
                let circuits = g.functions().iter().map(check_structure).collect();
                let v = (g.num_features() <= DEFAULT_VALIDATION_BOUND)
                    .then(|| validate_gdf(g, ValidationMode::default()).expect("within bound"));
                CheckReport::Gdf(GdfCheck {
                    circuits,
                    binding: v.as_ref().map(|v| v.binding),
                    non_overlapping: v.as_ref().map(|v| v.non_overlapping),
                    counterexample: v
                        .and_then(|v| v.counterexample)
                        .map(|p| p.iter().map(|&b| b as u8).collect()),
                })
            }
        }
    }

    /// Runs the structural check and refuses models that fail it.
    pub fn ensure_sound(&self) -> Result<(), Failure> {
        let report = self.check();
        if report.passes() {
            Ok(())
        } else {
            Err(Failure::structure(anyhow::anyhow!(
                "model failed the structural check: {}",
                report.to_json()
            )))
        }
    }

    pub fn label(&self, class: usize) -> Option<String> {
        match self {
            Model::Circuit(_) => None,
            Model::Gdf(g) => Some(g.classes()[class].clone()),
        }
    }
}

fn parse_point(text: &str) -> anyhow::Result<Vec<bool>> {
    let text = text.trim();
    let tokens: Vec<&str> = if text.contains(',') {
        text.split(',').map(str::trim).collect()
    } else if text.contains(char::is_whitespace) {
        text.split_whitespace().collect()
    } else {
        text.split("").filter(|s| !s.is_empty()).collect()
    };
    tokens
        .into_iter()
        .map(|t| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            other => bail!("instance value {other:?} is not 0 or 1"),
        })
        .collect()
}

/// A point to explain together with an optional class read from CSV.
pub struct Target {
    pub point: Vec<bool>,
    pub class: Option<bool>,
}

pub fn read_target(
    inline: Option<&str>,
    csv: Option<&PathBuf>,
    row: Option<usize>,
    m: usize,
) -> Result<Option<Target>, Failure> {
    let target = match (inline, csv) {
        (Some(_), Some(_)) => {
            return Err(Failure::input(anyhow::anyhow!("--instance and --csv are mutually exclusive")))
        }
        (Some(text), None) => Target {
            point: parse_point(text).map_err(Failure::input)?,
            class: None,
        },
        (None, Some(path)) => {
            let data = Dataset::load(path, m).map_err(|e| Failure::input(e.into()))?;
            let r = data.row(row.unwrap_or(0)).map_err(|e| Failure::input(e.into()))?;
            Target {
                point: r.point.clone(),
                class: r.class,
            }
        }
        (None, None) => return Ok(None),
    };
    if target.point.len() != m {
        return Err(Failure::input(anyhow::anyhow!(
            "instance has {} values but the model has {m} features",
            target.point.len()
        )));
    }
    Ok(Some(target))
}

pub fn oracle(m: usize) -> Result<Box<dyn Oracle>, Failure> {
    let spec = std::env::var("KCX_ORACLE").unwrap_or_else(|_| "builtin".into());
    if spec == "builtin" {
        return Ok(Box::new(Dpll::new(m)));
    }
    match spec.strip_prefix("dimacs:") {
        Some(path) if !path.is_empty() => Ok(Box::new(DimacsOracle::new(path, m))),
        _ => Err(Failure::input(anyhow::anyhow!(
            "KCX_ORACLE must be `builtin` or `dimacs:<path>`, got {spec:?}"
        ))),
    }
}
