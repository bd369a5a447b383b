//! Optimal sum-of-costs solvers for item relocation on graphs: multi-agent
//! path finding and the token swapping, rotation and permutation variants.
//!
//! Three optimal algorithms share one problem model: Conflict-Based Search
//! ([`cbs`]), an eager SAT encoding over MDD time expansions
//! ([`solvers::mdd_sat_solve`]) and its lazy counterpart that adds collision
//! clauses on demand ([`solvers::smt_cbs_solve`]). [`oracle`] searches the
//! joint configuration space exhaustively and serves as ground truth.

pub mod bench;
pub mod cbs;
pub mod encoder;
pub mod error;
pub mod graphs;
pub mod instance_file;
pub mod metrics;
pub mod oracle;
pub mod pathfinder;
pub mod relocation;
pub mod solvers;

pub use error::{Error, Result};
pub use graphs::{all_pairs_distances, make_clique, make_grid, make_random, make_star, DistTable, Graph, UNREACHABLE};
pub use instance_file::{parse_instance, write_instance};
pub use relocation::{
    plan_cost, random_instance, step_legal, validate, Collision, Configuration, Cost, Instance, Plan, Variant,
};
pub use solvers::{solve_with, Algorithm, Outcome, Report, SatBackend, SolveStats, SolverConfig};
