//! Time expansion pruned to MDDs, and the CNF encodings built over them.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use relocate_sat::{CnfFormula, Lit, Model, Var};

use crate::error::{invalid, Error, Result};
use crate::relocation::{Collision, Cost, Instance, Plan, Variant};

/// Makespan that fits every plan of sum-of-costs at most `xi`.
pub fn makespan_bound(inst: &Instance, xi: Cost) -> Result<usize> {
    let lb = inst
        .lower_bound()
        .ok_or_else(|| invalid("some item cannot reach its goal"))?;
    if xi < lb {
        return Err(invalid(format!("cost bound {xi} below the lower bound {lb}")));
    }
    let longest = inst.item_distances().into_iter().max().unwrap_or(0);
    Ok((longest + (xi - lb)) as usize)
}

/// Time-expanded reachable set of one item: level `t` holds the vertices
/// the item can occupy at `t` in some path of individual cost at most
/// `d + slack`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mdd {
    pub item: usize,
    levels: Vec<Vec<usize>>,
}

impl Mdd {
    pub fn makespan(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, t: usize) -> &[usize] {
        &self.levels[t]
    }

    pub fn contains(&self, v: usize, t: usize) -> bool {
        self.levels.get(t).is_some_and(|l| l.binary_search(&v).is_ok())
    }

    pub fn num_nodes(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

pub fn build_mdd(inst: &Instance, item: usize, xi: Cost) -> Result<Mdd> {
    let mu = makespan_bound(inst, xi)?;
    let slack = (xi - inst.lower_bound().unwrap_or(0)) as usize;
    let dt = inst.dist();
    let (s, g) = (inst.start()[item], inst.goal()[item]);
    let budget = dt.get(s, g) as usize + slack;
    let levels = (0..=mu)
        .map(|t| {
            (0..inst.num_vertices())
                .filter(|&v| {
                    let (from_start, to_goal) = (dt.get(s, v) as usize, dt.get(v, g) as usize);
                    from_start <= t && t.min(budget).saturating_add(to_goal) <= budget
                })
                .collect()
        })
        .collect();
    Ok(Mdd { item, levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    /// Item at `v` at time `t`.
    X { item: usize, v: usize, t: usize },
    /// Item moves (or waits, `from == to`) between `t` and `t + 1`.
    E {
        item: usize,
        from: usize,
        to: usize,
        t: usize,
    },
    /// Item has not settled at its goal by time `t`.
    Late { item: usize, t: usize },
    /// Cardinality-counter auxiliary.
    Aux(usize),
}

#[derive(Debug, Clone, Default)]
pub struct VarMap {
    index: HashMap<VarKey, Var>,
    keys: Vec<VarKey>,
}

impl VarMap {
    fn alloc(&mut self, f: &mut CnfFormula, key: VarKey) -> Var {
        let var = f.new_var();
        self.index.insert(key, var);
        self.keys.push(key);
        var
    }

    pub fn get(&self, key: &VarKey) -> Option<Var> {
        self.index.get(key).copied()
    }

    pub fn x(&self, item: usize, v: usize, t: usize) -> Option<Var> {
        self.get(&VarKey::X { item, v, t })
    }

    pub fn e(&self, item: usize, from: usize, to: usize, t: usize) -> Option<Var> {
        self.get(&VarKey::E { item, from, to, t })
    }

    pub fn key(&self, var: Var) -> VarKey {
        self.keys[var.index()]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// A collision remembered across cost bounds, as the clause that forbids it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Conflict {
    /// `-X(a,v,t) | -X(b,v,t)`
    Vertex { a: usize, b: usize, v: usize, t: usize },
    /// `-E(mover,from,to,t) | -X(occupant,to,t)`
    Occupancy {
        mover: usize,
        occupant: usize,
        from: usize,
        to: usize,
        t: usize,
    },
    /// `-E(item,from,to,t) | OR_j E(j,to,from,t)`
    Swap {
        item: usize,
        from: usize,
        to: usize,
        t: usize,
    },
    /// `-E(a,from,to,t) | -E(b,to,from,t)`
    Rotation {
        a: usize,
        b: usize,
        from: usize,
        to: usize,
        t: usize,
    },
    /// `-E(item,from,to,t) | OR_j X(j,to,t)`
    Vacant {
        item: usize,
        from: usize,
        to: usize,
        t: usize,
    },
}

impl From<&Collision> for Conflict {
    fn from(c: &Collision) -> Conflict {
        match *c {
            Collision::Vertex { a, b, v, t } => Conflict::Vertex { a, b, v, t },
            Collision::Occupancy {
                mover,
                occupant,
                from,
                to,
                t,
            } => Conflict::Occupancy {
                mover,
                occupant,
                from,
                to,
                t,
            },
            Collision::Edge { a, b, from, to, t } => Conflict::Rotation { a, b, from, to, t },
            Collision::Unswapped { item, from, to, t, .. } => Conflict::Swap { item, from, to, t },
            Collision::Vacant { item, from, to, t } => Conflict::Vacant { item, from, to, t },
        }
    }
}

pub type ConflictStore = BTreeSet<Conflict>;

#[derive(Debug, Clone)]
pub struct Encoding {
    pub formula: CnfFormula,
    pub vars: VarMap,
    pub mdds: Vec<Mdd>,
    pub xi: Cost,
    pub makespan: usize,
}

impl Encoding {
    /// The ground clause for `conflict`. Variables outside the MDDs are
    /// false: a clause mentioning one negatively is already satisfied and
    /// yields `None`.
    pub fn conflict_clause(&self, inst: &Instance, conflict: &Conflict) -> Option<Vec<Lit>> {
        let vars = &self.vars;
        let k = inst.num_items();
        let neg = |v: Option<Var>| v.map(Var::neg);
        match *conflict {
            Conflict::Vertex { a, b, v, t } => Some(vec![neg(vars.x(a, v, t))?, neg(vars.x(b, v, t))?]),
            Conflict::Occupancy {
                mover,
                occupant,
                from,
                to,
                t,
            } => Some(vec![
                neg(vars.e(mover, from, to, t))?,
                neg(vars.x(occupant, to, t))?,
            ]),
            Conflict::Rotation { a, b, from, to, t } => Some(vec![
                neg(vars.e(a, from, to, t))?,
                neg(vars.e(b, to, from, t))?,
            ]),
            Conflict::Swap { item, from, to, t } => {
                let mut c = vec![neg(vars.e(item, from, to, t))?];
                c.extend((0..k).filter(|&j| j != item).filter_map(|j| vars.e(j, to, from, t)).map(Var::pos));
                Some(c)
            }
            Conflict::Vacant { item, from, to, t } => {
                let mut c = vec![neg(vars.e(item, from, to, t))?];
                c.extend((0..k).filter(|&j| j != item).filter_map(|j| vars.x(j, to, t)).map(Var::pos));
                Some(c)
            }
        }
    }

    /// DIMACS with one `c <var> X item v t` / `c <var> E item u v t` comment per variable.
    pub fn to_annotated_dimacs(&self) -> String {
        let mut out = String::new();
        for (i, key) in self.vars.keys.iter().enumerate() {
            let var = i + 1;
            let _ = match *key {
                VarKey::X { item, v, t } => writeln!(out, "c {var} X {item} {v} {t}"),
                VarKey::E { item, from, to, t } => writeln!(out, "c {var} E {item} {from} {to} {t}"),
                VarKey::Late { item, t } => writeln!(out, "c {var} L {item} {t}"),
                VarKey::Aux(_) => Ok(()),
            };
        }
        out.push_str(&self.formula.to_dimacs());
        out
    }
}

/// Paths, cost accounting and all movement rules: satisfiable iff a plan of
/// sum-of-costs at most `xi` exists.
pub fn encode_full(inst: &Instance, xi: Cost) -> Result<Encoding> {
    let mut enc = encode_paths(inst, xi)?;
    let k = inst.num_items();
    let mu = enc.makespan;
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    {
        let vars = &enc.vars;
        let mdds = &enc.mdds;
        for t in 0..=mu {
            for a in 0..k {
                for &v in mdds[a].level(t) {
                    let xa = vars.x(a, v, t).unwrap();
                    for b in a + 1..k {
                        if let Some(xb) = vars.x(b, v, t) {
                            clauses.push(vec![xa.neg(), xb.neg()]);
                        }
                    }
                }
            }
        }
        for a in 0..k {
            for t in 0..mu {
                for &u in mdds[a].level(t) {
                    for &v in mdds[a].level(t + 1) {
                        if u == v || !inst.graph().has_edge(u, v) {
                            continue;
                        }
                        let conflicts: Vec<Conflict> = match inst.variant() {
                            Variant::Mapf => (0..k)
                                .filter(|&b| b != a)
                                .map(|b| Conflict::Occupancy {
                                    mover: a,
                                    occupant: b,
                                    from: u,
                                    to: v,
                                    t,
                                })
                                .collect(),
                            Variant::Tswap => vec![Conflict::Swap { item: a, from: u, to: v, t }],
                            Variant::Trot => (a + 1..k)
                                .map(|b| Conflict::Rotation { a, b, from: u, to: v, t })
                                .chain([Conflict::Vacant { item: a, from: u, to: v, t }])
                                .collect(),
                            Variant::Tperm => vec![Conflict::Vacant { item: a, from: u, to: v, t }],
                        };
                        clauses.extend(conflicts.iter().filter_map(|c| enc.conflict_clause(inst, c)));
                    }
                }
            }
        }
    }
    for c in clauses {
        enc.formula.add_clause(c).map_err(internal)?;
    }
    Ok(enc)
}

/// Paths and cost accounting only, plus one clause per stored conflict.
pub fn encode_basic(inst: &Instance, xi: Cost, conflicts: &ConflictStore) -> Result<Encoding> {
    let mut enc = encode_paths(inst, xi)?;
    let clauses: Vec<Vec<Lit>> = conflicts.iter().filter_map(|c| enc.conflict_clause(inst, c)).collect();
    for c in clauses {
        enc.formula.add_clause(c).map_err(internal)?;
    }
    Ok(enc)
}

fn internal(e: impl std::fmt::Display) -> Error {
    Error::Internal(e.to_string())
}

fn encode_paths(inst: &Instance, xi: Cost) -> Result<Encoding> {
    let mu = makespan_bound(inst, xi)?;
    let k = inst.num_items();
    let g = inst.graph();
    let mdds = (0..k).map(|i| build_mdd(inst, i, xi)).collect::<Result<Vec<_>>>()?;
    let mut f = CnfFormula::new();
    let mut vars = VarMap::default();
    for (i, mdd) in mdds.iter().enumerate() {
        for t in 0..=mu {
            for &v in mdd.level(t) {
                vars.alloc(&mut f, VarKey::X { item: i, v, t });
            }
        }
        for t in 0..mu {
            for &u in mdd.level(t) {
                for &v in mdd.level(t + 1) {
                    if u == v || g.has_edge(u, v) {
                        vars.alloc(&mut f, VarKey::E { item: i, from: u, to: v, t });
                    }
                }
            }
        }
    }
    let slack = (xi - inst.lower_bound().unwrap_or(0)) as usize;
    let dists = inst.item_distances();
    let mut late = Vec::new();
    for i in 0..k {
        let d = dists[i] as usize;
        for t in d..d + slack {
            late.push(vars.alloc(&mut f, VarKey::Late { item: i, t }));
        }
    }

    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    for (i, mdd) in mdds.iter().enumerate() {
        let (s, goal) = (inst.start()[i], inst.goal()[i]);
        clauses.push(vec![vars.x(i, s, 0).ok_or_else(|| internal("start missing from MDD"))?.pos()]);
        clauses.push(vec![vars.x(i, goal, mu).ok_or_else(|| internal("goal missing from MDD"))?.pos()]);
        for t in 0..=mu {
            for &u in mdd.level(t) {
                let x = vars.x(i, u, t).unwrap();
                if t < mu {
                    let out: Vec<Var> = mdd.level(t + 1).iter().filter_map(|&v| vars.e(i, u, v, t)).collect();
                    let mut leave = vec![x.neg()];
                    leave.extend(out.iter().map(|e| e.pos()));
                    clauses.push(leave);
                    for p in 0..out.len() {
                        for q in p + 1..out.len() {
                            clauses.push(vec![out[p].neg(), out[q].neg()]);
                        }
                    }
                    for &e in &out {
                        let VarKey::E { to, .. } = vars.key(e) else { unreachable!() };
                        clauses.push(vec![e.neg(), x.pos()]);
                        clauses.push(vec![e.neg(), vars.x(i, to, t + 1).unwrap().pos()]);
                    }
                }
                if t > 0 {
                    let mut enter = vec![x.neg()];
                    enter.extend(mdd.level(t - 1).iter().filter_map(|&w| vars.e(i, w, u, t - 1)).map(Var::pos));
                    clauses.push(enter);
                }
            }
        }
        let d = dists[i] as usize;
        for t in d..d + slack {
            let l = vars.get(&VarKey::Late { item: i, t }).unwrap();
            if let Some(at_goal) = vars.x(i, goal, t) {
                clauses.push(vec![at_goal.pos(), l.pos()]);
            } else {
                clauses.push(vec![l.pos()]);
            }
            if t + 1 < d + slack {
                let next = vars.get(&VarKey::Late { item: i, t: t + 1 }).unwrap();
                clauses.push(vec![next.neg(), l.pos()]);
            }
        }
    }
    at_most(&mut f, &mut vars, &mut clauses, &late, slack);
    for c in clauses {
        f.add_clause(c).map_err(internal)?;
    }
    Ok(Encoding {
        formula: f,
        vars,
        mdds,
        xi,
        makespan: mu,
    })
}

/// Sequential-counter encoding of `sum(xs) <= bound`.
fn at_most(f: &mut CnfFormula, vars: &mut VarMap, clauses: &mut Vec<Vec<Lit>>, xs: &[Var], bound: usize) {
    let m = xs.len();
    if m <= bound {
        return;
    }
    if bound == 0 {
        clauses.extend(xs.iter().map(|x| vec![x.neg()]));
        return;
    }
    // s[i][j]: at least j + 1 of xs[0..=i] are true.
    let mut s: Vec<Vec<Var>> = Vec::with_capacity(m);
    for _ in 0..m - 1 {
        let row = (0..bound)
            .map(|_| {
                let id = vars.len();
                vars.alloc(f, VarKey::Aux(id))
            })
            .collect();
        s.push(row);
    }
    clauses.push(vec![xs[0].neg(), s[0][0].pos()]);
    for j in 1..bound {
        clauses.push(vec![s[0][j].neg()]);
    }
    for i in 1..m - 1 {
        clauses.push(vec![xs[i].neg(), s[i][0].pos()]);
        clauses.push(vec![s[i - 1][0].neg(), s[i][0].pos()]);
        for j in 1..bound {
            clauses.push(vec![xs[i].neg(), s[i - 1][j - 1].neg(), s[i][j].pos()]);
            clauses.push(vec![s[i - 1][j].neg(), s[i][j].pos()]);
        }
        clauses.push(vec![xs[i].neg(), s[i - 1][bound - 1].neg()]);
    }
    clauses.push(vec![xs[m - 1].neg(), s[m - 2][bound - 1].neg()]);
}

/// Reads the paths off a model; trailing steps in which every item already
/// rests at its goal are dropped.
pub fn extract_plan(inst: &Instance, enc: &Encoding, model: &Model) -> Result<Plan> {
    let mut paths = Vec::with_capacity(inst.num_items());
    for (i, mdd) in enc.mdds.iter().enumerate() {
        let mut path = Vec::with_capacity(enc.makespan + 1);
        for t in 0..=enc.makespan {
            let mut here = mdd.level(t).iter().filter(|&&v| model.value(enc.vars.x(i, v, t).unwrap()));
            match (here.next(), here.next()) {
                (Some(&v), None) => path.push(v),
                (None, _) => return Err(internal(format!("item {i} is nowhere at time {t}"))),
                (Some(_), Some(_)) => return Err(internal(format!("item {i} is in two places at time {t}"))),
            }
        }
        paths.push(path);
    }
    let goal = inst.goal();
    let settled = (0..=enc.makespan)
        .rev()
        .take_while(|&t| paths.iter().enumerate().all(|(i, p)| p[t] == goal[i]))
        .last()
        .unwrap_or(enc.makespan);
    for p in &mut paths {
        p.truncate(settled + 1);
    }
    Plan::new(paths)
}
