//! Conflict-driven clause learning.
//!
//! Two-literal watching with blocker literals, first-UIP learning with local
//! minimization, VSIDS branching with phase saving, Luby restarts and
//! activity-based learnt clause deletion. Clauses may be added between
//! `solve` calls; learnt clauses are kept since the clause set only grows.

use std::time::{Duration, Instant};

use crate::formula::CnfFormula;
use crate::lit::{Lit, Var};

const NO_REASON: u32 = u32::MAX;
const VAL_FALSE: u8 = 0;
const VAL_TRUE: u8 = 1;
const VAL_UNDEF: u8 = 2;

const RESTART_BASE: f64 = 100.0;
const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;

/// A total truth assignment over the variable pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn new(values: Vec<bool>) -> Self {
        Model { values }
    }

    pub fn value(&self, var: Var) -> bool {
        self.values[var.index()]
    }

    pub fn lit_value(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    Timeout,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub solves: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub restarts: u64,
    pub learnt_clauses: u64,
}

/// Solves a formula from scratch.
pub fn solve(formula: &CnfFormula, timeout: Option<Duration>) -> SolveResult {
    let deadline = timeout.map(|t| Instant::now() + t);
    let mut s = Solver::from_formula(formula);
    s.solve(deadline)
}

/// Literals live in the solver's arena at `start..start + len`.
struct Clause {
    start: u32,
    len: u32,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
    binary: bool,
}

enum SearchOutcome {
    Sat,
    Unsat,
    Restart,
    Timeout,
}

/// Indexed binary max-heap over variable activities.
#[derive(Default)]
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

const NOT_IN_HEAP: usize = usize::MAX;

impl VarOrder {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, NOT_IN_HEAP);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len();
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn better(a: u32, b: u32, act: &[f64]) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::better(v, p, act) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && Self::better(self.heap[r], self.heap[l], act) {
                r
            } else {
                l
            };
            if !Self::better(self.heap[c], v, act) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

/// An incremental solving session.
pub struct Solver {
    clauses: Vec<Clause>,
    arena: Vec<Lit>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarOrder,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    num_learnts: usize,
    max_learnts: f64,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            arena: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            num_learnts: 0,
            max_learnts: 0.0,
            stats: SolverStats::default(),
        }
    }

    pub fn from_formula(formula: &CnfFormula) -> Self {
        let mut s = Solver::new();
        s.reserve_vars(formula.num_vars());
        for c in formula.clauses() {
            s.add_clause(c);
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause set is known to be unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len();
        self.reserve_vars(v + 1);
        Var(v as u32)
    }

    /// Grows the pool so that variables `0..n` exist.
    pub fn reserve_vars(&mut self, n: usize) {
        let old = self.assigns.len();
        if n <= old {
            return;
        }
        self.assigns.resize(n, VAL_UNDEF);
        self.level.resize(n, 0);
        self.reason.resize(n, NO_REASON);
        self.activity.resize(n, 0.0);
        self.phase.resize(n, false);
        self.seen.resize(n, false);
        self.watches.resize_with(2 * n, Vec::new);
        self.order.grow(n);
        for v in old..n {
            self.order.insert(v as u32, &self.activity);
        }
    }

    /// Adds a clause to the session. Returns false when the clause set has
    /// become unsatisfiable at the root level.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.reserve_vars(max + 1);
        }
        self.cancel_until(0);

        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        for w in c.windows(2) {
            if w[0].var() == w[1].var() {
                return true;
            }
        }
        let mut simplified = Vec::with_capacity(c.len());
        for l in c {
            match self.lit_value(l) {
                VAL_TRUE => return true,
                VAL_FALSE => {}
                _ => simplified.push(l),
            }
        }
        match simplified.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(simplified[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(simplified, false);
                true
            }
        }
    }

    pub fn solve(&mut self, deadline: Option<Instant>) -> SolveResult {
        self.stats.solves += 1;
        if !self.ok {
            return SolveResult::Unsat;
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        let originals = self.clauses.iter().filter(|c| !c.learnt).count();
        self.max_learnts = self.max_learnts.max(originals as f64 / 3.0 + 2000.0);

        let mut round = 0u32;
        loop {
            let budget = (luby(2.0, round) * RESTART_BASE) as u64;
            match self.search(budget, deadline) {
                SearchOutcome::Sat => {
                    let values = self.assigns.iter().map(|&a| a == VAL_TRUE).collect();
                    self.cancel_until(0);
                    return SolveResult::Sat(Model::new(values));
                }
                SearchOutcome::Unsat => {
                    self.ok = false;
                    return SolveResult::Unsat;
                }
                SearchOutcome::Timeout => {
                    self.cancel_until(0);
                    return SolveResult::Timeout;
                }
                SearchOutcome::Restart => {
                    self.stats.restarts += 1;
                    round += 1;
                    self.max_learnts *= 1.05;
                }
            }
        }
    }

    fn search(&mut self, budget: u64, deadline: Option<Instant>) -> SearchOutcome {
        let mut conflicts = 0u64;
        let mut steps = 0u64;
        loop {
            steps += 1;
            if steps % 512 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                return SearchOutcome::Timeout;
            }
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.trail_lim.is_empty() {
                    return SearchOutcome::Unsat;
                }
                let (learnt, back_level) = self.analyze(confl);
                self.cancel_until(back_level);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, cref);
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
            } else {
                if conflicts >= budget {
                    self.cancel_until(0);
                    return SearchOutcome::Restart;
                }
                if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                }
                let Some(var) = self.pick_branch() else {
                    return SearchOutcome::Sat;
                };
                self.stats.decisions += 1;
                self.trail_lim.push(self.trail.len());
                let lit = Lit::new(Var(var), self.phase[var as usize]);
                self.enqueue(lit, NO_REASON);
            }
        }
    }

    fn pick_branch(&mut self) -> Option<u32> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v as usize] == VAL_UNDEF {
                return Some(v);
            }
        }
        None
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == VAL_UNDEF {
            VAL_UNDEF
        } else {
            a ^ u8::from(!l.is_positive())
        }
    }

    #[inline]
    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], VAL_UNDEF);
        self.assigns[v] = u8::from(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        debug_assert!(lits.len() >= 2);
        let cref = self.clauses.len() as u32;
        let binary = lits.len() == 2;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
            binary,
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
            binary,
        });
        if learnt {
            self.num_learnts += 1;
            self.stats.learnt_clauses += 1;
        }
        let start = self.arena.len() as u32;
        self.arena.extend_from_slice(&lits);
        self.clauses.push(Clause {
            start,
            len: lits.len() as u32,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        cref
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = VAL_UNDEF;
            self.reason[v] = NO_REASON;
            self.phase[v] = l.is_positive();
            self.order.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    /// Unit propagation; returns a conflicting clause if one is found.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            'watchers: while i < ws.len() {
                let w = ws[i];
                i += 1;
                let blocked = self.lit_value(w.blocker);
                if blocked == VAL_TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                if w.binary {
                    ws[j] = w;
                    j += 1;
                    if blocked == VAL_FALSE {
                        conflict = Some(w.cref);
                        while i < ws.len() {
                            ws[j] = ws[i];
                            j += 1;
                            i += 1;
                        }
                    } else {
                        self.enqueue(w.blocker, w.cref);
                    }
                    continue;
                }
                let (start, len) = {
                    let c = &self.clauses[w.cref as usize];
                    (c.start as usize, c.len as usize)
                };
                let lits = &mut self.arena[start..start + len];
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                if first != w.blocker && self.lit_value(first) == VAL_TRUE {
                    ws[j] = Watcher {
                        cref: w.cref,
                        blocker: first,
                        binary: false,
                    };
                    j += 1;
                    continue;
                }
                for k in start + 2..start + len {
                    let cand = self.arena[k];
                    if self.lit_value(cand) != VAL_FALSE {
                        self.arena.swap(start + 1, k);
                        self.watches[cand.code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                            binary: false,
                        });
                        continue 'watchers;
                    }
                }
                ws[j] = Watcher {
                    cref: w.cref,
                    blocker: first,
                    binary: false,
                };
                j += 1;
                if self.lit_value(first) == VAL_FALSE {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::new(Var(0), true)];
        let mut path_count = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();

        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let implied = p.map(|l| l.var());
            let (start, len) = {
                let c = &self.clauses[confl as usize];
                (c.start as usize, c.len as usize)
            };
            for k in start..start + len {
                let q = self.arena[k];
                let v = q.var().index();
                if Some(q.var()) != implied && !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path_count += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            confl = self.reason[lit.var().index()];
            self.seen[lit.var().index()] = false;
            path_count -= 1;
            if path_count == 0 {
                break;
            }
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by other literals of the learnt clause.
        let marked: Vec<Lit> = learnt[1..].to_vec();
        let mut kept = 1;
        for i in 1..learnt.len() {
            let q = learnt[i];
            let r = self.reason[q.var().index()];
            let redundant = r != NO_REASON
                && self.lits(r).iter().all(|l| {
                    let v = l.var().index();
                    l.var() == q.var() || self.seen[v] || self.level[v] == 0
                });
            if !redundant {
                learnt[kept] = q;
                kept += 1;
            }
        }
        for l in &marked {
            self.seen[l.var().index()] = false;
        }
        learnt.truncate(kept);

        let mut back_level = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            back_level = self.level[learnt[1].var().index()];
        }
        (learnt, back_level)
    }

    fn is_locked(&self, cref: usize) -> bool {
        self.lits(cref as u32)[..2]
            .iter()
            .any(|&l| self.reason[l.var().index()] == cref as u32 && self.lit_value(l) == VAL_TRUE)
    }

    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.len > 2
            })
            .collect();
        learnts.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .total_cmp(&self.clauses[b].activity)
                .then(a.cmp(&b))
        });
        let target = learnts.len() / 2;
        let mut removed = 0;
        for &i in &learnts {
            if removed >= target {
                break;
            }
            if self.is_locked(i) {
                continue;
            }
            self.clauses[i].deleted = true;
            removed += 1;
        }
        self.num_learnts -= removed;
        self.compact();
    }

    /// Drops deleted clauses, renumbers the rest and rebuilds the watches.
    fn compact(&mut self) {
        let mut renumbered = vec![NO_REASON; self.clauses.len()];
        let mut clauses = Vec::with_capacity(self.clauses.len());
        let mut arena = Vec::with_capacity(self.arena.len());
        for (i, c) in self.clauses.iter().enumerate() {
            if c.deleted {
                continue;
            }
            renumbered[i] = clauses.len() as u32;
            let start = arena.len() as u32;
            arena.extend_from_slice(&self.arena[c.start as usize..(c.start + c.len) as usize]);
            clauses.push(Clause {
                start,
                len: c.len,
                learnt: c.learnt,
                deleted: false,
                activity: c.activity,
            });
        }
        for l in &self.trail {
            let r = &mut self.reason[l.var().index()];
            if *r != NO_REASON {
                *r = renumbered[*r as usize];
            }
        }
        self.clauses = clauses;
        self.arena = arena;
        for ws in &mut self.watches {
            ws.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            let lits = &self.arena[c.start as usize..(c.start + c.len) as usize];
            let binary = lits.len() == 2;
            self.watches[lits[0].code()].push(Watcher {
                cref: i as u32,
                blocker: lits[1],
                binary,
            });
            self.watches[lits[1].code()].push(Watcher {
                cref: i as u32,
                blocker: lits[0],
                binary,
            });
        }
    }

    fn lits(&self, cref: u32) -> &[Lit] {
        let c = &self.clauses[cref as usize];
        &self.arena[c.start as usize..(c.start + c.len) as usize]
    }
}

/// The Luby restart sequence scaled by powers of `y`.
fn luby(y: f64, mut x: u32) -> f64 {
    let mut size = 1u32;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(xs: &[i64]) -> Vec<Lit> {
        xs.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<f64> = (0..7).map(|i| luby(2.0, i)).collect();
        assert_eq!(seq, vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn unit_and_contradiction() {
        let mut s = Solver::new();
        s.reserve_vars(1);
        assert!(s.add_clause(&lits(&[1])));
        match s.solve(None) {
            SolveResult::Sat(m) => assert!(m.value(Var(0))),
            other => panic!("{other:?}"),
        }
        assert!(!s.add_clause(&lits(&[-1])));
        assert_eq!(s.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut s = Solver::new();
        assert!(!s.add_clause(&[]));
        assert_eq!(s.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn tautologies_are_ignored() {
        let mut s = Solver::new();
        assert!(s.add_clause(&lits(&[1, -1])));
        assert!(s.solve(None).is_sat());
    }

    #[test]
    fn zero_timeout_reports_timeout_or_answer() {
        let mut f = CnfFormula::with_vars(3);
        f.add_clause(lits(&[1, 2, 3])).unwrap();
        let r = solve(&f, Some(Duration::ZERO));
        assert!(matches!(r, SolveResult::Sat(_) | SolveResult::Timeout));
    }
}
