//! The UCLA SDD package's text format.
//!
//! ```text
//! sdd <count>
//! L <id> <vtree> <signed literal>
//! T <id>
//! F <id>
//! D <id> <vtree> <k> <prime_1> <sub_1> ... <prime_k> <sub_k>
//! ```
//!
//! Decision nodes become `OR` over `AND(prime, sub)` elements. Vtree ids
//! are read and discarded. The last node defined is the root.

use std::collections::HashMap;

use super::{NnfBuilder, NnfDag, NodeId, OrTag, Var};
use crate::error::{ParseError, ParseErrorKind};

pub fn parse_sdd(text: &str, num_features: usize) -> Result<NnfDag, ParseError> {
    let mut b = NnfBuilder::new(num_features);
    let mut ids: HashMap<u64, NodeId> = HashMap::new();
    let mut seen_header = false;
    let mut root = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |kind| ParseError::new(line, kind);
        let mut tokens = raw.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        if tag == "c" {
            continue;
        }
        let mut next_int = |what: &'static str| -> Result<i64, ParseError> {
            let t = tokens
                .next()
                .ok_or_else(|| err(ParseErrorKind::MissingToken(what)))?;
            t.parse()
                .map_err(|_| err(ParseErrorKind::BadToken(t.to_string())))
        };
        if !seen_header {
            if tag != "sdd" {
                return Err(err(ParseErrorKind::MalformedHeader(
                    "expected `sdd <count>`".into(),
                )));
            }
            next_int("node count")
                .map_err(|_| err(ParseErrorKind::MalformedHeader("expected `sdd <count>`".into())))?;
            seen_header = true;
        } else {
            let mut id_of = |what| -> Result<u64, ParseError> {
                let v = next_int(what)?;
                u64::try_from(v).map_err(|_| err(ParseErrorKind::BadToken(v.to_string())))
            };
            let id = id_of("node id")?;
            if ids.contains_key(&id) {
                return Err(err(ParseErrorKind::DuplicateId(id)));
            }
            let resolve = |ids: &HashMap<u64, NodeId>, r: u64| {
                ids.get(&r)
                    .copied()
                    .ok_or_else(|| err(ParseErrorKind::DanglingReference(r)))
            };
            let node = match tag {
                "T" => b.constant(true),
                "F" => b.constant(false),
                "L" => {
                    let _vtree = id_of("vtree id")?;
                    let lit = next_int("literal")?;
                    if lit == 0 || lit.unsigned_abs() as usize > num_features {
                        return Err(err(ParseErrorKind::LiteralOutOfRange {
                            lit,
                            num_vars: num_features,
                        }));
                    }
                    b.literal(lit.unsigned_abs() as Var, lit > 0)
                        .map_err(|e| err(ParseErrorKind::Dag(e)))?
                }
                "D" => {
                    let _vtree = id_of("vtree id")?;
                    let k = id_of("element count")? as usize;
                    if k == 0 {
                        return Err(err(ParseErrorKind::MissingToken("decision elements")));
                    }
                    let mut elements = Vec::with_capacity(k);
                    let mut primes = Vec::with_capacity(k);
                    for _ in 0..k {
                        let p = resolve(&ids, id_of("prime")?)?;
                        let s = resolve(&ids, id_of("sub")?)?;
                        primes.push(p);
                        elements.push(b.and(vec![p, s]).map_err(|e| err(ParseErrorKind::Dag(e)))?);
                    }
                    let tag = literal_decision(&b, &primes).map_or(OrTag::Partition, OrTag::Decision);
                    b.or(elements, tag).map_err(|e| err(ParseErrorKind::Dag(e)))?
                }
                other => return Err(err(ParseErrorKind::UnknownTag(other.to_string()))),
            };
            if let Some(t) = tokens.next() {
                return Err(err(ParseErrorKind::TrailingGarbage(t.to_string())));
            }
            ids.insert(id, node);
            root = Some(node);
        }
    }
    if !seen_header {
        return Err(ParseError::new(
            1,
            ParseErrorKind::MalformedHeader("empty input".into()),
        ));
    }
    let root = root.ok_or_else(|| ParseError::new(1, ParseErrorKind::NoNodes))?;
    Ok(b.build_reachable(root))
}

/// When every prime is a literal of one variable with distinct polarities,
/// the decision node is an ordinary decision on that variable.
fn literal_decision(b: &NnfBuilder, primes: &[NodeId]) -> Option<Var> {
    if primes.len() < 2 {
        return None;
    }
    let mut var = None;
    let mut seen = [false; 2];
    for &p in primes {
        let (v, pol) = b.node(p).literal()?;
        if *var.get_or_insert(v) != v || seen[pol as usize] {
            return None;
        }
        seen[pol as usize] = true;
    }
    var
}
