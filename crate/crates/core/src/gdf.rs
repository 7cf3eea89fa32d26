//! Generalized decision functions: one circuit per class.
//!
//! When the GDF is binding (some class always fires) and non-overlapping
//! (at most one fires), "class `p` is forced" is the same as "no other
//! class is attainable". Weak tests therefore only need conditioning and
//! consistency on the other classes' circuits, never validity, and DNNF
//! suffices for each circuit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParseError;
use crate::explain::{self, Enumerator, ExplainError, Explanation, Order, WeakTest};
use crate::nnf::{parse_c2d, NnfDag};
use crate::oracle::point_from_index;
use crate::queries::{self, QueryError, Selector};
use crate::sat::Oracle;
use crate::FeatureSet;

/// Default feature bound for brute-force validation.
pub const DEFAULT_VALIDATION_BOUND: usize = 20;

#[derive(Debug, Error)]
pub enum GdfError {
    #[error("a GDF needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("{labels} class labels for {circuits} circuits")]
    LabelCount { labels: usize, circuits: usize },
    #[error("circuit {index} has {found} features, expected {expected}")]
    FeatureMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("brute-force validation over {m} features exceeds the bound {bound}")]
    BoundExceeded { m: usize, bound: usize },
    #[error("no class fires on {0:?}")]
    NoClass(Vec<bool>),
    #[error("classes {classes:?} all fire on {point:?}")]
    Overlap { point: Vec<bool>, classes: Vec<usize> },
    #[error("class index {0} out of range")]
    BadClass(usize),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct Gdf {
    classes: Vec<String>,
    functions: Vec<NnfDag>,
}

impl Gdf {
    pub fn new(classes: Vec<String>, functions: Vec<NnfDag>) -> Result<Self, GdfError> {
        if functions.len() < 2 {
            return Err(GdfError::TooFewClasses(functions.len()));
        }
        if classes.len() != functions.len() {
            return Err(GdfError::LabelCount {
                labels: classes.len(),
                circuits: functions.len(),
            });
        }
        let m = functions[0].num_features();
        if let Some((index, f)) = functions
            .iter()
            .enumerate()
            .find(|(_, f)| f.num_features() != m)
        {
            return Err(GdfError::FeatureMismatch {
                index,
                expected: m,
                found: f.num_features(),
            });
        }
        Ok(Gdf { classes, functions })
    }

    pub fn num_features(&self) -> usize {
        self.functions[0].num_features()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn functions(&self) -> &[NnfDag] {
        &self.functions
    }

    fn firing(&self, point: &[bool]) -> Result<Vec<usize>, QueryError> {
        let mut out = Vec::new();
        for (j, f) in self.functions.iter().enumerate() {
            if queries::evaluate(f, point)? {
                out.push(j);
            }
        }
        Ok(out)
    }
}

/// JSON manifest naming class labels and their c2d circuit files. Relative
/// paths are resolved against the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdfManifest {
    pub classes: Vec<String>,
    pub circuits: Vec<PathBuf>,
}

pub fn load_gdf(manifest_path: &Path) -> Result<Gdf, GdfError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| GdfError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let manifest: GdfManifest = serde_json::from_str(&read(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut functions = Vec::with_capacity(manifest.circuits.len());
    for c in &manifest.circuits {
        let path = dir.join(c);
        let dag = parse_c2d(&read(&path)?).map_err(|source| GdfError::Parse { path, source })?;
        functions.push(dag);
    }
    Gdf::new(manifest.classes, functions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Evaluate every point; refused above `bound` features.
    BruteForce { bound: usize },
    /// Take the caller's word for it.
    AssertOnly,
}

impl Default for ValidationMode {
    fn default() -> Self {
        ValidationMode::BruteForce {
            bound: DEFAULT_VALIDATION_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GdfValidation {
    pub binding: bool,
    pub non_overlapping: bool,
    /// First point, in truth-table order, where the number of firing
    /// classes differs from one.
    pub counterexample: Option<Vec<bool>>,
}

impl GdfValidation {
    pub fn is_valid(&self) -> bool {
        self.binding && self.non_overlapping
    }
}

pub fn validate_gdf(g: &Gdf, mode: ValidationMode) -> Result<GdfValidation, GdfError> {
    let bound = match mode {
        ValidationMode::AssertOnly => {
            return Ok(GdfValidation {
                binding: true,
                non_overlapping: true,
                counterexample: None,
            })
        }
        ValidationMode::BruteForce { bound } => bound,
    };
    let m = g.num_features();
    if m > bound {
        return Err(GdfError::BoundExceeded { m, bound });
    }
    let mut v = GdfValidation {
        binding: true,
        non_overlapping: true,
        counterexample: None,
    };
    for k in 0..1u64 << m {
        let point = point_from_index(k, m);
        let fired = g.firing(&point)?.len();
        if fired == 1 {
            continue;
        }
        if fired == 0 {
            v.binding = false;
        } else {
            v.non_overlapping = false;
        }
        if v.counterexample.is_none() {
            v.counterexample = Some(point);
        }
        if !v.binding && !v.non_overlapping {
            break;
        }
    }
    Ok(v)
}

/// The index of the single class whose circuit fires on `point`.
pub fn gdf_predict(g: &Gdf, point: &[bool]) -> Result<usize, GdfError> {
    let fired = g.firing(point)?;
    match fired.as_slice() {
        [j] => Ok(*j),
        [] => Err(GdfError::NoClass(point.to_vec())),
        _ => Err(GdfError::Overlap {
            point: point.to_vec(),
            classes: fired,
        }),
    }
}

/// A point together with the GDF's prediction for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdfInstance {
    point: Vec<bool>,
    class: usize,
}

impl GdfInstance {
    pub fn predicted(g: &Gdf, point: Vec<bool>) -> Result<Self, GdfError> {
        let class = gdf_predict(g, &point)?;
        Ok(GdfInstance { point, class })
    }

    pub fn point(&self) -> &[bool] {
        &self.point
    }

    pub fn class(&self) -> usize {
        self.class
    }
}

/// Explanations of a GDF prediction, built on CO and CD only.
#[derive(Debug, Clone)]
pub struct GdfExplainer<'a> {
    gdf: &'a Gdf,
    instance: &'a GdfInstance,
}

impl<'a> GdfExplainer<'a> {
    pub fn new(gdf: &'a Gdf, instance: &'a GdfInstance) -> Self {
        GdfExplainer { gdf, instance }
    }

    fn others(&self) -> impl Iterator<Item = &NnfDag> {
        let p = self.instance.class;
        self.gdf
            .functions
            .iter()
            .enumerate()
            .filter(move |(q, _)| *q != p)
            .map(|(_, f)| f)
    }

    fn other_attainable(&self, fixed: &FeatureSet) -> bool {
        let sel = Selector::new(fixed, &self.instance.point);
        self.others()
            .any(|f| queries::is_consistent_under(f, &sel))
    }

    fn ensure_contrast_exists(&self) -> Result<(), ExplainError> {
        if self.other_attainable(&FeatureSet::new()) {
            Ok(())
        } else {
            Err(ExplainError::ConstantClassifier(true))
        }
    }

    pub fn one_axp(&self, order: &Order) -> Result<Explanation, ExplainError> {
        let order = order.resolve(self.num_features())?;
        explain::find_axp(self, self.all_features(), &order)
    }

    pub fn one_cxp(&self, order: &Order) -> Result<Explanation, ExplainError> {
        self.ensure_contrast_exists()?;
        let order = order.resolve(self.num_features())?;
        explain::find_cxp(self, self.all_features(), &order)
    }

    pub fn enumerate<O: Oracle>(&self, oracle: O, order: &Order) -> Result<Enumerator<'_, Self, O>, ExplainError> {
        self.ensure_contrast_exists()?;
        Enumerator::new(self, oracle, order)
    }
}

impl WeakTest for GdfExplainer<'_> {
    fn num_features(&self) -> usize {
        self.gdf.num_features()
    }

    /// No other class stays consistent once `fixed` is conditioned on.
    fn is_weak_axp(&self, fixed: &FeatureSet) -> bool {
        !self.other_attainable(fixed)
    }

    /// Some other class is consistent with everything outside `free` fixed.
    fn is_weak_cxp(&self, free: &FeatureSet) -> bool {
        self.other_attainable(&self.complement(free))
    }
}

pub fn gdf_is_weak_axp(g: &Gdf, inst: &GdfInstance, fixed: &FeatureSet) -> bool {
    GdfExplainer::new(g, inst).is_weak_axp(fixed)
}

pub fn gdf_is_weak_cxp(g: &Gdf, inst: &GdfInstance, free: &FeatureSet) -> bool {
    GdfExplainer::new(g, inst).is_weak_cxp(free)
}

pub fn gdf_one_axp(g: &Gdf, inst: &GdfInstance, order: &Order) -> Result<Explanation, ExplainError> {
    GdfExplainer::new(g, inst).one_axp(order)
}

pub fn gdf_one_cxp(g: &Gdf, inst: &GdfInstance, order: &Order) -> Result<Explanation, ExplainError> {
    GdfExplainer::new(g, inst).one_cxp(order)
}

/// Runs a full enumeration and returns the explanations with the final
/// oracle call count.
pub fn gdf_enumerate<O: Oracle>(
    g: &Gdf,
    inst: &GdfInstance,
    oracle: O,
    order: &Order,
    limit: Option<usize>,
) -> Result<(Vec<Explanation>, usize), ExplainError> {
    let ex = GdfExplainer::new(g, inst);
    let mut en = ex.enumerate(oracle, order)?;
    let found = en.run(limit)?;
    Ok((found, en.state().oracle_calls))
}
