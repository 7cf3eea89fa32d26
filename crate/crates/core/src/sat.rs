//! CNF formulas over selector variables and the SAT oracles that solve them.
//!
//! The built-in [`Dpll`] solver is complete and deterministic: it runs unit
//! propagation to a fixpoint, then branches on the highest-index unassigned
//! variable, trying `true` first. [`DimacsOracle`] hands the formula to an
//! external solver binary instead.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;

use thiserror::Error;

/// A signed literal over variables `1..=num_vars`, DIMACS style.
pub type Lit = i32;

#[derive(Debug, Error)]
pub enum SatError {
    #[error("literal {lit} is outside the variable range 1..={num_vars}")]
    LiteralOutOfRange { lit: Lit, num_vars: usize },
    #[error("external solver failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize) -> Self {
        CnfFormula {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// Appends a clause. The empty clause is accepted and makes the formula
    /// unsatisfiable.
    pub fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        if let Some(&lit) = clause
            .iter()
            .find(|l| **l == 0 || l.unsigned_abs() as usize > self.num_vars)
        {
            return Err(SatError::LiteralOutOfRange {
                lit,
                num_vars: self.num_vars,
            });
        }
        self.clauses.push(clause.to_vec());
        Ok(())
    }

    pub fn is_satisfied_by(&self, model: &OracleModel) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| model.lit_value(l)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                write!(out, "{l} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

/// A total assignment to `p_1..p_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleModel {
    assignment: Vec<bool>,
}

impl OracleModel {
    pub fn new(assignment: Vec<bool>) -> Self {
        OracleModel { assignment }
    }

    /// Value of variable `var` (1-based).
    pub fn value(&self, var: usize) -> bool {
        self.assignment[var - 1]
    }

    pub fn lit_value(&self, lit: Lit) -> bool {
        self.value(lit.unsigned_abs() as usize) == (lit > 0)
    }

    pub fn assignment(&self) -> &[bool] {
        &self.assignment
    }

    /// Variables assigned true.
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i + 1)
    }
}

/// A SAT oracle that accumulates clauses and can be asked for a model.
pub trait Oracle {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError>;

    /// A model of the clauses added so far, or `None` if there is none.
    fn solve(&mut self) -> Result<Option<OracleModel>, SatError>;

    /// Drops every clause and starts over with `num_vars` variables.
    fn reset(&mut self, num_vars: usize);
}

/// Which unassigned variable the DPLL search branches on next.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Branching {
    /// Highest index first.
    #[default]
    Descending,
    /// Lowest index first.
    Ascending,
}

/// Chronological-backtracking DPLL with unit propagation.
#[derive(Debug, Clone)]
pub struct Dpll {
    formula: CnfFormula,
    branching: Branching,
}

impl Dpll {
    pub fn new(num_vars: usize) -> Self {
        Self::with_branching(num_vars, Branching::default())
    }

    pub fn with_branching(num_vars: usize, branching: Branching) -> Self {
        Dpll {
            formula: CnfFormula::new(num_vars),
            branching,
        }
    }

    pub fn from_formula(formula: CnfFormula) -> Self {
        Dpll {
            formula,
            branching: Branching::default(),
        }
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    Unset,
    True,
    False,
}

struct Search<'a> {
    clauses: &'a [Vec<Lit>],
    values: Vec<Value>,
    trail: Vec<(usize, bool)>,
}

impl Search<'_> {
    fn lit(&self, l: Lit) -> Value {
        match self.values[l.unsigned_abs() as usize] {
            Value::Unset => Value::Unset,
            v if (v == Value::True) == (l > 0) => Value::True,
            _ => Value::False,
        }
    }

    fn assign(&mut self, l: Lit, decision: bool) {
        let var = l.unsigned_abs() as usize;
        self.values[var] = if l > 0 { Value::True } else { Value::False };
        self.trail.push((var, decision));
    }

    /// Propagates units to a fixpoint; false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for ci in 0..self.clauses.len() {
                let clause = &self.clauses[ci];
                let mut unit = None;
                let mut unset = 0;
                let mut satisfied = false;
                for &l in clause {
                    match self.lit(l) {
                        Value::True => {
                            satisfied = true;
                            break;
                        }
                        Value::Unset => {
                            unset += 1;
                            unit = Some(l);
                        }
                        Value::False => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match unset {
                    0 => return false,
                    1 => {
                        self.assign(unit.unwrap(), false);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// Undoes the trail up to the most recent decision still set to true and
    /// flips it. Returns false when no decision is left to flip.
    fn backtrack(&mut self) -> bool {
        while let Some((var, decision)) = self.trail.pop() {
            let was_true = self.values[var] == Value::True;
            self.values[var] = Value::Unset;
            if decision && was_true {
                // the flipped value is forced by the refutation below it
                self.assign(-(var as Lit), false);
                return true;
            }
        }
        false
    }
}

impl Oracle for Dpll {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        self.formula.add_clause(clause)
    }

    fn solve(&mut self) -> Result<Option<OracleModel>, SatError> {
        let n = self.formula.num_vars;
        let mut s = Search {
            clauses: &self.formula.clauses,
            values: vec![Value::Unset; n + 1],
            trail: Vec::with_capacity(n),
        };
        let order: Vec<usize> = match self.branching {
            Branching::Descending => (1..=n).rev().collect(),
            Branching::Ascending => (1..=n).collect(),
        };
        loop {
            if !s.propagate() {
                if !s.backtrack() {
                    return Ok(None);
                }
                continue;
            }
            match order.iter().find(|&&v| s.values[v] == Value::Unset) {
                Some(&v) => s.assign(v as Lit, true),
                None => {
                    let model = OracleModel::new(
                        s.values[1..].iter().map(|v| *v == Value::True).collect(),
                    );
                    debug_assert!(self.formula.is_satisfied_by(&model));
                    return Ok(Some(model));
                }
            }
        }
    }

    fn reset(&mut self, num_vars: usize) {
        self.formula = CnfFormula::new(num_vars);
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        (**self).add_clause(clause)
    }

    fn solve(&mut self) -> Result<Option<OracleModel>, SatError> {
        (**self).solve()
    }

    fn reset(&mut self, num_vars: usize) {
        (**self).reset(num_vars)
    }
}

/// Runs an external solver on a DIMACS file per call.
///
/// The solver is invoked as `<program> <file.cnf>` and must print the
/// competition output format: an `s SATISFIABLE` / `s UNSATISFIABLE` line
/// and, when satisfiable, `v` lines listing the model terminated by `0`.
/// Variables the solver leaves out are read as false; the completed model
/// is checked against the formula.
#[derive(Debug, Clone)]
pub struct DimacsOracle {
    program: PathBuf,
    formula: CnfFormula,
}

impl DimacsOracle {
    pub fn new(program: impl Into<PathBuf>, num_vars: usize) -> Self {
        DimacsOracle {
            program: program.into(),
            formula: CnfFormula::new(num_vars),
        }
    }
}

/// Reads solver output in competition format.
pub fn parse_solver_output(output: &str, num_vars: usize) -> Result<Option<OracleModel>, SatError> {
    let mut status = None;
    let mut assignment = vec![false; num_vars];
    for line in output.lines() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("s") => {
                status = match tokens.next() {
                    Some("SATISFIABLE") => Some(true),
                    Some("UNSATISFIABLE") => Some(false),
                    other => {
                        return Err(SatError::External(format!(
                            "unrecognized status {other:?}"
                        )))
                    }
                }
            }
            Some("v") => {
                for t in tokens {
                    let lit: i64 = t
                        .parse()
                        .map_err(|_| SatError::External(format!("bad model token `{t}`")))?;
                    if lit == 0 {
                        break;
                    }
                    let var = lit.unsigned_abs() as usize;
                    if var > num_vars {
                        return Err(SatError::External(format!("model mentions variable {var}")));
                    }
                    assignment[var - 1] = lit > 0;
                }
            }
            _ => {}
        }
    }
    match status {
        Some(true) => Ok(Some(OracleModel::new(assignment))),
        Some(false) => Ok(None),
        None => Err(SatError::External("no status line in solver output".into())),
    }
}

impl Oracle for DimacsOracle {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        self.formula.add_clause(clause)
    }

    fn solve(&mut self) -> Result<Option<OracleModel>, SatError> {
        let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
        file.write_all(self.formula.to_dimacs().as_bytes())?;
        file.flush()?;
        let out = Command::new(&self.program).arg(file.path()).output()?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        let model = parse_solver_output(&stdout, self.formula.num_vars)?;
        if let Some(m) = &model {
            if !self.formula.is_satisfied_by(m) {
                return Err(SatError::External(
                    "solver returned an assignment that violates the formula".into(),
                ));
            }
        }
        Ok(model)
    }

    fn reset(&mut self, num_vars: usize) {
        self.formula = CnfFormula::new(num_vars);
    }
}
