//! SAT-based optimal drivers: eager MDD-SAT and lazy SMT-CBS.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use relocate_sat::{CnfFormula, ExternalSolver, Lit, SolveResult, Solver};

use crate::encoder::{encode_basic, encode_full, extract_plan, Conflict, ConflictStore, Encoding};
use crate::error::{invalid, Error, Result};
use crate::oracle::{oracle_solve, reachable, OracleLimits, OracleOutcome};
use crate::relocation::{plan_cost, validate, Collision, Cost, Instance, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Cbs,
    MddSat,
    SmtCbs,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Cbs, Algorithm::MddSat, Algorithm::SmtCbs, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cbs => "cbs",
            Algorithm::MddSat => "mddsat",
            Algorithm::SmtCbs => "smtcbs",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| invalid(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SatBackend {
    #[default]
    Internal,
    /// DIMACS solver run as a subprocess; never incremental.
    External(ExternalSolver),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub timeout: Option<Duration>,
    pub backend: SatBackend,
    /// Keep one SAT session alive across SMT-CBS refinements instead of
    /// re-solving from scratch.
    pub incremental: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            timeout: None,
            backend: SatBackend::Internal,
            incremental: true,
        }
    }
}

impl SolverConfig {
    pub fn with_timeout(timeout: Duration) -> Self {
        SolverConfig {
            timeout: Some(timeout),
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveStats {
    pub algorithm: Algorithm,
    pub cost: Option<Cost>,
    pub makespan: Option<usize>,
    pub wall_time: Duration,
    pub sat_time: Duration,
    pub sat_calls: usize,
    /// Clauses and variables of the last formula solved.
    pub clauses: usize,
    pub variables: usize,
    pub refinements: usize,
    pub conflicts: usize,
    pub ct_nodes: usize,
    pub ct_generated: usize,
    pub low_level_calls: usize,
}

impl SolveStats {
    pub fn new(algorithm: Algorithm) -> SolveStats {
        SolveStats {
            algorithm,
            cost: None,
            makespan: None,
            wall_time: Duration::ZERO,
            sat_time: Duration::ZERO,
            sat_calls: 0,
            clauses: 0,
            variables: 0,
            refinements: 0,
            conflicts: 0,
            ct_nodes: 0,
            ct_generated: 0,
            low_level_calls: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solved(Plan),
    Timeout,
    Unsolvable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub outcome: Outcome,
    pub stats: SolveStats,
}

impl Report {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn cost(&self) -> Option<Cost> {
        self.plan().map(plan_cost)
    }

    pub(crate) fn finish(outcome: Outcome, mut stats: SolveStats, started: Instant) -> Report {
        stats.wall_time = started.elapsed();
        if let Outcome::Solved(p) = &outcome {
            stats.makespan = Some(p.makespan());
        }
        Report { outcome, stats }
    }
}

pub(crate) fn deadline_of(config: &SolverConfig) -> Option<Instant> {
    config.timeout.map(|t| Instant::now() + t)
}

pub(crate) fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Exhaustive reachability when the configuration space is small enough;
/// `None` otherwise.
pub fn precheck(inst: &Instance) -> Option<bool> {
    const MAX_VERTICES: usize = 10;
    const MAX_CONFIGURATIONS: usize = 20_000;
    let n = inst.num_vertices();
    if n > MAX_VERTICES {
        return None;
    }
    let mut count = 1usize;
    for i in 0..inst.num_items() {
        count = count.saturating_mul(n - i);
        if count > MAX_CONFIGURATIONS {
            return None;
        }
    }
    reachable(inst, MAX_CONFIGURATIONS)
}

/// What the cost search may assume before it starts.
pub(crate) enum Bounds {
    /// Proven unsolvable.
    Unsolvable,
    /// Lower bound and, unless solvability is proven, the largest cost worth trying.
    Search { lower: Cost, ceiling: Option<Cost> },
}

pub(crate) fn cost_bounds(inst: &Instance) -> Bounds {
    let Some(lower) = inst.lower_bound() else {
        return Bounds::Unsolvable;
    };
    match precheck(inst) {
        Some(false) => Bounds::Unsolvable,
        Some(true) => Bounds::Search { lower, ceiling: None },
        None => {
            let n = inst.num_vertices() as Cost;
            Bounds::Search {
                lower,
                ceiling: Some(lower.saturating_add(4u32.saturating_mul(n).saturating_mul(n))),
            }
        }
    }
}

/// A formula under solution, grown clause by clause.
struct Session<'a> {
    config: &'a SolverConfig,
    formula: CnfFormula,
    live: Option<Solver>,
}

impl<'a> Session<'a> {
    fn new(config: &'a SolverConfig, formula: CnfFormula) -> Session<'a> {
        let live = (config.incremental && config.backend == SatBackend::Internal).then(|| Solver::from_formula(&formula));
        Session { config, formula, live }
    }

    fn add_clause(&mut self, clause: Vec<Lit>) -> Result<()> {
        if let Some(s) = &mut self.live {
            s.add_clause(&clause);
        }
        self.formula
            .add_clause(clause)
            .map_err(|e| Error::Internal(e.to_string()))
    }

    fn solve(&mut self, deadline: Option<Instant>, stats: &mut SolveStats) -> Result<SolveResult> {
        let began = Instant::now();
        let result = match (&mut self.live, &self.config.backend) {
            (Some(s), _) => s.solve(deadline),
            (None, SatBackend::Internal) => Solver::from_formula(&self.formula).solve(deadline),
            (None, SatBackend::External(ext)) => {
                let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()));
                ext.solve(&self.formula, remaining)
                    .map_err(|e| Error::Backend(e.to_string()))?
            }
        };
        stats.sat_time += began.elapsed();
        stats.sat_calls += 1;
        stats.clauses = self.formula.num_clauses();
        stats.variables = self.formula.num_vars();
        Ok(result)
    }
}

fn checked_plan(inst: &Instance, enc: &Encoding, result: &SolveResult) -> Result<Option<(Plan, Vec<Collision>)>> {
    let SolveResult::Sat(model) = result else {
        return Ok(None);
    };
    let plan = extract_plan(inst, enc, model)?;
    let collisions = validate(inst, &plan)?;
    Ok(Some((plan, collisions)))
}

/// Eager search: the full encoding at increasing cost bounds until the
/// first satisfiable one.
pub fn mdd_sat_solve(inst: &Instance, config: &SolverConfig) -> Result<Report> {
    let started = Instant::now();
    let deadline = deadline_of(config);
    let mut stats = SolveStats::new(Algorithm::MddSat);
    let (lower, ceiling) = match cost_bounds(inst) {
        Bounds::Unsolvable => return Ok(Report::finish(Outcome::Unsolvable, stats, started)),
        Bounds::Search { lower, ceiling } => (lower, ceiling),
    };
    let mut xi = lower;
    loop {
        if expired(deadline) {
            return Ok(Report::finish(Outcome::Timeout, stats, started));
        }
        if ceiling.is_some_and(|c| xi > c) {
            return Ok(Report::finish(Outcome::Unsolvable, stats, started));
        }
        let enc = encode_full(inst, xi)?;
        let mut session = Session::new(config, enc.formula.clone());
        let result = session.solve(deadline, &mut stats)?;
        if result == SolveResult::Timeout {
            return Ok(Report::finish(Outcome::Timeout, stats, started));
        }
        if let Some((plan, collisions)) = checked_plan(inst, &enc, &result)? {
            if !collisions.is_empty() {
                return Err(Error::Internal(format!("eager model violates the rules: {:?}", collisions[0])));
            }
            stats.cost = Some(xi);
            return Ok(Report::finish(Outcome::Solved(plan), stats, started));
        }
        xi += 1;
    }
}

/// Runs one algorithm. The oracle's state limit is reported as a timeout.
pub fn solve_with(algorithm: Algorithm, inst: &Instance, config: &SolverConfig) -> Result<Report> {
    match algorithm {
        Algorithm::Cbs => crate::cbs::cbs_solve(inst, config),
        Algorithm::MddSat => mdd_sat_solve(inst, config),
        Algorithm::SmtCbs => smt_cbs_solve(inst, config),
        Algorithm::Oracle => {
            let started = Instant::now();
            let mut stats = SolveStats::new(Algorithm::Oracle);
            let outcome = match oracle_solve(inst, &OracleLimits::default())? {
                OracleOutcome::Solved { plan, cost } => {
                    stats.cost = Some(cost);
                    Outcome::Solved(plan)
                }
                OracleOutcome::Unsolvable => Outcome::Unsolvable,
                OracleOutcome::Limit => Outcome::Timeout,
            };
            Ok(Report::finish(outcome, stats, started))
        }
    }
}

/// The clause SMT-CBS adds for a collision.
pub fn refine_for_variant(inst: &Instance, enc: &Encoding, collision: &Collision) -> Option<Vec<Lit>> {
    enc.conflict_clause(inst, &Conflict::from(collision))
}

/// Lazy search: paths-only encodings refined with one clause per collision
/// found in the extracted plan; conflicts carry over to larger cost bounds.
pub fn smt_cbs_solve(inst: &Instance, config: &SolverConfig) -> Result<Report> {
    let started = Instant::now();
    let deadline = deadline_of(config);
    let mut stats = SolveStats::new(Algorithm::SmtCbs);
    let (lower, ceiling) = match cost_bounds(inst) {
        Bounds::Unsolvable => return Ok(Report::finish(Outcome::Unsolvable, stats, started)),
        Bounds::Search { lower, ceiling } => (lower, ceiling),
    };
    let mut store = ConflictStore::new();
    let mut xi = lower;
    loop {
        if ceiling.is_some_and(|c| xi > c) {
            return Ok(Report::finish(Outcome::Unsolvable, stats, started));
        }
        if expired(deadline) {
            return Ok(Report::finish(Outcome::Timeout, stats, started));
        }
        match smt_cbs_fixed(inst, xi, &mut store, config, deadline, &mut stats)? {
            Fixed::Solved(plan) => {
                stats.cost = Some(xi);
                return Ok(Report::finish(Outcome::Solved(plan), stats, started));
            }
            Fixed::Timeout => return Ok(Report::finish(Outcome::Timeout, stats, started)),
            Fixed::Unsat => xi += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fixed {
    Solved(Plan),
    Unsat,
    Timeout,
}

/// One cost bound of SMT-CBS. Every refinement clause is new within the
/// bound; seeing one twice means the model broke a clause already present.
pub fn smt_cbs_fixed(
    inst: &Instance,
    xi: Cost,
    store: &mut ConflictStore,
    config: &SolverConfig,
    deadline: Option<Instant>,
    stats: &mut SolveStats,
) -> Result<Fixed> {
    let enc = encode_basic(inst, xi, store)?;
    let mut session = Session::new(config, enc.formula.clone());
    let mut added: HashSet<Conflict> = store.iter().copied().collect();
    loop {
        if expired(deadline) {
            return Ok(Fixed::Timeout);
        }
        let result = session.solve(deadline, stats)?;
        if result == SolveResult::Timeout {
            return Ok(Fixed::Timeout);
        }
        let Some((plan, collisions)) = checked_plan(inst, &enc, &result)? else {
            return Ok(Fixed::Unsat);
        };
        if collisions.is_empty() {
            return Ok(Fixed::Solved(plan));
        }
        let SolveResult::Sat(model) = &result else {
            unreachable!()
        };
        let mut refined = false;
        for col in &collisions {
            let conflict = Conflict::from(col);
            let clause = enc
                .conflict_clause(inst, &conflict)
                .ok_or_else(|| Error::Internal(format!("collision {col:?} outside the MDDs")))?;
            // Secondary effects of co-located items already satisfy their clause.
            if clause.iter().any(|&l| model.lit_value(l)) {
                continue;
            }
            if !added.insert(conflict) {
                return Err(Error::Internal(format!("refinement {conflict:?} added twice at cost {xi}")));
            }
            store.insert(conflict);
            session.add_clause(clause)?;
            stats.refinements += 1;
            refined = true;
        }
        if !refined {
            return Err(Error::Internal(format!("no collision of the plan at cost {xi} refutes the model")));
        }
        stats.conflicts = store.len();
    }
}
