//! Propositional machinery for the relocation solvers.
//!
//! The crate provides a CNF container with optional variable annotations,
//! a conflict-driven clause-learning solver that supports adding clauses
//! between calls, DIMACS import/export, and an adapter that hands a formula
//! to an external solver process.

mod dimacs;
mod external;
mod formula;
mod lit;
mod solver;

pub use dimacs::{from_dimacs, DimacsError};
pub use external::{ExternalError, ExternalSolver};
pub use formula::{CnfFormula, FormulaError};
pub use lit::{Lit, Var};
pub use solver::{solve, Model, SolveResult, Solver, SolverStats};
