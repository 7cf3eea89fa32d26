//! Exhaustive ground truth for small feature spaces.
//!
//! Everything here works from a plain evaluation function and never touches
//! the circuit queries, so it can check them independently.
//!
//! Points and feature sets are encoded as bitmasks in which feature `i` of
//! `m` is bit `m - i`, i.e. feature 1 is the most significant bit. Point
//! index `k` thus enumerates feature space in truth-table order.

use thiserror::Error;

use crate::nnf::Var;
use crate::FeatureSet;

/// Largest `m` for single weak-explanation checks.
pub const WEAK_TEST_LIMIT: usize = 20;
/// Largest `m` for full family enumeration.
pub const FAMILY_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("brute force over {m} features exceeds the limit of {limit}")]
pub struct BoundExceeded {
    pub m: usize,
    pub limit: usize,
}

fn check_bound(m: usize, limit: usize) -> Result<(), BoundExceeded> {
    if m > limit {
        Err(BoundExceeded { m, limit })
    } else {
        Ok(())
    }
}

/// The point with truth-table index `k`.
pub fn point_from_index(k: u64, m: usize) -> Vec<bool> {
    (1..=m).map(|i| k >> (m - i) & 1 == 1).collect()
}

pub fn index_of_point(point: &[bool]) -> u64 {
    point.iter().fold(0, |acc, &b| acc << 1 | b as u64)
}

/// All `2^m` points in truth-table order.
pub fn all_points(m: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u64 << m).map(move |k| point_from_index(k, m))
}

fn mask_of(set: &FeatureSet, m: usize) -> u64 {
    set.iter().fold(0, |acc, &i| acc | 1 << (m - i as usize))
}

fn set_of(mask: u64, m: usize) -> FeatureSet {
    (1..=m as Var).filter(|&i| mask >> (m - i as usize) & 1 == 1).collect()
}

/// Submasks of `free`, each combined with the fixed part of `base`.
fn completions(base: u64, free: u64) -> impl Iterator<Item = u64> {
    let fixed = base & !free;
    let mut sub = Some(free);
    std::iter::from_fn(move || {
        let s = sub?;
        sub = if s == 0 { None } else { Some((s - 1) & free) };
        Some(fixed | s)
    })
}

/// Every point agreeing with `v` on `fixed` is classified `c`.
pub fn brute_force_weak_axp(
    eval: impl Fn(&[bool]) -> bool,
    v: &[bool],
    c: bool,
    fixed: &FeatureSet,
) -> Result<bool, BoundExceeded> {
    let m = v.len();
    check_bound(m, WEAK_TEST_LIMIT)?;
    let full = (1u64 << m) - 1;
    let free = full & !mask_of(fixed, m);
    Ok(completions(index_of_point(v), free).all(|k| eval(&point_from_index(k, m)) == c))
}

/// Some point agreeing with `v` outside `free` is not classified `c`.
/// Returns the first such witness.
pub fn brute_force_cxp_witness(
    eval: impl Fn(&[bool]) -> bool,
    v: &[bool],
    c: bool,
    free: &FeatureSet,
) -> Result<Option<Vec<bool>>, BoundExceeded> {
    let m = v.len();
    check_bound(m, WEAK_TEST_LIMIT)?;
    Ok(completions(index_of_point(v), mask_of(free, m))
        .map(|k| point_from_index(k, m))
        .find(|p| eval(p) != c))
}

pub fn brute_force_weak_cxp(
    eval: impl Fn(&[bool]) -> bool,
    v: &[bool],
    c: bool,
    free: &FeatureSet,
) -> Result<bool, BoundExceeded> {
    Ok(brute_force_cxp_witness(eval, v, c, free)?.is_some())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    /// Subset-minimal weak AXps, in increasing mask order.
    pub axps: Vec<FeatureSet>,
    /// Subset-minimal weak CXps, in increasing mask order.
    pub cxps: Vec<FeatureSet>,
    pub model_count: u64,
}

/// Scans the whole subset lattice for minimal weak AXps and CXps.
pub fn brute_force_families(
    eval: impl Fn(&[bool]) -> bool,
    v: &[bool],
    c: bool,
) -> Result<OracleReport, BoundExceeded> {
    let m = v.len();
    check_bound(m, FAMILY_LIMIT)?;
    let n = 1usize << m;
    let table: Vec<bool> = (0..n as u64).map(|k| eval(&point_from_index(k, m))).collect();
    let vi = index_of_point(v);
    let full = (n - 1) as u64;

    let weak_axp: Vec<bool> = (0..n as u64)
        .map(|s| completions(vi, full & !s).all(|k| table[k as usize] == c))
        .collect();
    let weak_cxp: Vec<bool> = (0..n as u64)
        .map(|y| completions(vi, y).any(|k| table[k as usize] != c))
        .collect();
    // both predicates are monotone, so checking immediate subsets suffices
    let minimal = |weak: &[bool], s: u64| {
        weak[s as usize] && (0..m).all(|b| s >> b & 1 == 0 || !weak[(s & !(1 << b)) as usize])
    };
    let axps = (0..n as u64)
        .filter(|&s| minimal(&weak_axp, s))
        .map(|s| set_of(s, m))
        .collect();
    let cxps = (0..n as u64)
        .filter(|&s| minimal(&weak_cxp, s))
        .map(|s| set_of(s, m))
        .collect();
    Ok(OracleReport {
        axps,
        cxps,
        model_count: table.iter().filter(|&&b| b).count() as u64,
    })
}
