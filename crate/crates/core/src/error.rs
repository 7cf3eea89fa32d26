use thiserror::Error;

use crate::nnf::DagError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("node {node} references node {child}, which is not defined earlier")]
    ForwardReference { node: usize, child: usize },
    #[error("literal {lit} is outside the variable range 1..={num_vars}")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("trailing garbage: {0}")]
    TrailingGarbage(String),
    #[error("unknown line tag `{0}`")]
    UnknownTag(String),
    #[error("reference to undefined node {0}")]
    DanglingReference(u64),
    #[error("node id {0} is defined twice")]
    DuplicateId(u64),
    #[error("missing {0}")]
    MissingToken(&'static str),
    #[error("cannot parse `{0}`")]
    BadToken(String),
    #[error("header declares {declared} nodes but {found} were given")]
    NodeCountMismatch { declared: usize, found: usize },
    #[error("header declares {declared} edges but {found} were given")]
    EdgeCountMismatch { declared: usize, found: usize },
    #[error("no nodes")]
    NoNodes,
    #[error(transparent)]
    Dag(DagError),
}
