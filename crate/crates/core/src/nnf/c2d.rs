//! The c2d `.nnf` exchange format.
//!
//! ```text
//! nnf <nodes> <edges> <vars>
//! L <signed literal>
//! A <k> <child ids...>
//! O <decision var or 0> <k> <child ids...>
//! ```
//!
//! Node ids are line positions counted from 0 and the last node is the root.

use std::fmt::Write as _;
use std::str::SplitWhitespace;

use super::{NnfBuilder, NnfDag, NnfNode, NodeId, OrTag, Var};
use crate::error::{ParseError, ParseErrorKind};

struct Line<'a> {
    number: usize,
    tokens: SplitWhitespace<'a>,
}

impl<'a> Line<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError::new(self.number, kind)
    }

    fn int<T: std::str::FromStr>(&mut self, what: &'static str) -> Result<T, ParseError> {
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| self.err(ParseErrorKind::MissingToken(what)))?;
        tok.parse()
            .map_err(|_| self.err(ParseErrorKind::BadToken(tok.to_string())))
    }

    fn finish(mut self) -> Result<(), ParseError> {
        match self.tokens.next() {
            None => Ok(()),
            Some(t) => Err(self.err(ParseErrorKind::TrailingGarbage(t.to_string()))),
        }
    }
}

pub fn parse_c2d(text: &str) -> Result<NnfDag, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line {
            number: i + 1,
            tokens: l.split_whitespace(),
        })
        .filter(|l| l.tokens.clone().next().is_some_and(|t| t != "c"));

    let mut header = lines
        .next()
        .ok_or_else(|| ParseError::new(1, ParseErrorKind::MalformedHeader("empty input".into())))?;
    let malformed = |l: &Line, msg: &str| l.err(ParseErrorKind::MalformedHeader(msg.into()));
    if header.tokens.next() != Some("nnf") {
        return Err(malformed(&header, "expected `nnf <nodes> <edges> <vars>`"));
    }
    let mut counts = [0usize; 3];
    for c in counts.iter_mut() {
        *c = header
            .tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed(&header, "expected three nonnegative counts"))?;
    }
    let [num_nodes, num_edges, num_vars] = counts;
    if num_nodes == 0 {
        return Err(malformed(&header, "a circuit needs at least one node"));
    }
    let header_line = header.number;
    header.finish()?;

    let mut b = NnfBuilder::with_capacity(num_vars, num_nodes);
    let mut edges = 0usize;
    let mut last_line = header_line;
    for _ in 0..num_nodes {
        let mut line = lines.next().ok_or_else(|| {
            ParseError::new(
                last_line + 1,
                ParseErrorKind::NodeCountMismatch {
                    declared: num_nodes,
                    found: b.len(),
                },
            )
        })?;
        last_line = line.number;
        let id = b.len();
        let tag = line.tokens.next().unwrap_or_default();
        let node = match tag {
            "L" => {
                let lit: i64 = line.int("literal")?;
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(line.err(ParseErrorKind::LiteralOutOfRange { lit, num_vars }));
                }
                NnfNode::literal_node(lit.unsigned_abs() as Var, lit > 0)
            }
            "A" | "O" => {
                let decision: Option<Var> = if tag == "O" {
                    let v: Var = line.int("decision variable")?;
                    if v as usize > num_vars {
                        return Err(line.err(ParseErrorKind::LiteralOutOfRange {
                            lit: v as i64,
                            num_vars,
                        }));
                    }
                    Some(v)
                } else {
                    None
                };
                let k: usize = line.int("child count")?;
                let mut children = Vec::with_capacity(k);
                for _ in 0..k {
                    let c: usize = line.int("child id")?;
                    if c >= id {
                        return Err(line.err(ParseErrorKind::ForwardReference { node: id, child: c }));
                    }
                    children.push(NodeId::new(c));
                }
                edges += k;
                match (tag, k) {
                    ("A", 0) => NnfNode::True,
                    ("A", _) => NnfNode::And(children),
                    (_, 0) => NnfNode::False,
                    _ => NnfNode::Or {
                        children,
                        tag: match decision {
                            Some(v) if v > 0 => OrTag::Decision(v),
                            _ => OrTag::Plain,
                        },
                    },
                }
            }
            other => return Err(line.err(ParseErrorKind::UnknownTag(other.to_string()))),
        };
        let number = line.number;
        line.finish()?;
        b.add(node)
            .map_err(|e| ParseError::new(number, ParseErrorKind::Dag(e)))?;
    }
    if let Some(extra) = lines.next() {
        return Err(extra.err(ParseErrorKind::TrailingGarbage(
            "content after the last declared node".into(),
        )));
    }
    if edges != num_edges {
        return Err(ParseError::new(
            header_line,
            ParseErrorKind::EdgeCountMismatch {
                declared: num_edges,
                found: edges,
            },
        ));
    }
    let root = NodeId::new(num_nodes - 1);
    Ok(b.build(root).expect("at least one node"))
}

/// Serializes a circuit in c2d format. Nodes after the root are not
/// emitted, so the root is always the last line.
pub fn to_c2d(dag: &NnfDag) -> String {
    let nodes = &dag.nodes()[..=dag.root().index()];
    let edges: usize = nodes.iter().map(|n| n.children().len()).sum();
    let mut out = String::new();
    writeln!(out, "nnf {} {} {}", nodes.len(), edges, dag.num_features()).unwrap();
    for node in nodes {
        let ids = |c: &[NodeId]| {
            c.iter()
                .map(|c| c.index().to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match node {
            NnfNode::True => out.push_str("A 0\n"),
            NnfNode::False => out.push_str("O 0 0\n"),
            NnfNode::Pos(v) => writeln!(out, "L {v}").unwrap(),
            NnfNode::Neg(v) => writeln!(out, "L -{v}").unwrap(),
            NnfNode::And(c) => writeln!(out, "A {} {}", c.len(), ids(c)).unwrap(),
            NnfNode::Or { children, tag } => writeln!(
                out,
                "O {} {} {}",
                tag.decision_var().unwrap_or(0),
                children.len(),
                ids(children)
            )
            .unwrap(),
        }
    }
    out
}
