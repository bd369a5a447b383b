use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::lit::{Lit, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("literal {lit} references variable {var} but only {num_vars} are allocated")]
    UnallocatedVar { lit: i64, var: u32, num_vars: usize },
    #[error("variable {0} already carries the annotation {1:?}")]
    DuplicateName(u32, String),
}

/// A clause list over a pool of allocated variables.
///
/// Clauses may be empty; an empty clause makes the formula unsatisfiable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    names: BTreeMap<Var, String>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(num_vars: usize) -> Self {
        CnfFormula {
            num_vars,
            ..Self::default()
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars as u32);
        self.num_vars += 1;
        v
    }

    /// Allocates a variable carrying a debug annotation.
    pub fn new_named_var(&mut self, name: impl Into<String>) -> Var {
        let v = self.new_var();
        self.names.insert(v, name.into());
        v
    }

    pub fn set_name(&mut self, var: Var, name: impl Into<String>) -> Result<(), FormulaError> {
        let name = name.into();
        if let Some(old) = self.names.get(&var) {
            return Err(FormulaError::DuplicateName(var.0 + 1, old.clone()));
        }
        self.names.insert(var, name);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn names(&self) -> &BTreeMap<Var, String> {
        &self.names
    }

    pub fn add_clause<I>(&mut self, lits: I) -> Result<(), FormulaError>
    where
        I: IntoIterator<Item = Lit>,
    {
        let clause: Vec<Lit> = lits.into_iter().collect();
        for &l in &clause {
            if l.var().index() >= self.num_vars {
                return Err(FormulaError::UnallocatedVar {
                    lit: l.to_dimacs(),
                    var: l.var().0 + 1,
                    num_vars: self.num_vars,
                });
            }
        }
        self.clauses.push(clause);
        Ok(())
    }

    /// Evaluates every clause under `assignment` (indexed by variable).
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| assignment.get(l.var().index()).copied() == Some(l.is_positive()))
        })
    }

    pub fn to_dimacs(&self) -> String {
        self.render(false)
    }

    /// DIMACS text preceded by one `c <name>` comment per annotated variable.
    pub fn to_dimacs_annotated(&self) -> String {
        self.render(true)
    }

    fn render(&self, annotated: bool) -> String {
        let mut out = String::new();
        if annotated {
            for (v, name) in &self.names {
                let _ = writeln!(out, "c {} {}", name, v.0 + 1);
            }
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for l in clause {
                let _ = write!(out, "{} ", l.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }
}
