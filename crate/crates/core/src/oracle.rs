//! Exhaustive optimal solver over joint configurations, for small instances.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use crate::error::{invalid, Result};
use crate::relocation::{Configuration, Cost, Instance, Plan, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_vertices: usize,
    pub max_items: usize,
    /// Distinct search states before giving up.
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_vertices: 10,
            max_items: 5,
            max_states: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Solved { cost: Cost, plan: Plan },
    Unsolvable,
    Limit,
}

impl OracleOutcome {
    pub fn cost(&self) -> Option<Cost> {
        match self {
            OracleOutcome::Solved { cost, .. } => Some(*cost),
            _ => None,
        }
    }
}

/// Every configuration reachable from `c` in one legal step, except staying put.
pub fn successors(inst: &Instance, c: &[usize]) -> Vec<Configuration> {
    let n = inst.num_vertices();
    let mut holder = vec![usize::MAX; n];
    for (i, &v) in c.iter().enumerate() {
        holder[v] = i;
    }
    let mut out = Vec::new();
    let mut next = c.to_vec();
    let mut taken = vec![false; n];
    extend(inst, c, &holder, 0, &mut next, &mut taken, &mut out);
    out.retain(|x| x.as_slice() != c);
    out
}

fn extend(
    inst: &Instance,
    c: &[usize],
    holder: &[usize],
    i: usize,
    next: &mut Vec<usize>,
    taken: &mut [bool],
    out: &mut Vec<Configuration>,
) {
    if i == c.len() {
        if step_ok(inst.variant(), c, holder, next) {
            out.push(next.clone());
        }
        return;
    }
    let here = c[i];
    let options = std::iter::once(here).chain(inst.graph().neighbors(here).iter().copied());
    for w in options {
        if taken[w] {
            continue;
        }
        if w != here {
            let occupied = holder[w] != usize::MAX;
            match inst.variant() {
                Variant::Mapf if occupied => continue,
                Variant::Tswap | Variant::Trot | Variant::Tperm if !occupied => continue,
                _ => {}
            }
        }
        taken[w] = true;
        next[i] = w;
        extend(inst, c, holder, i + 1, next, taken, out);
        taken[w] = false;
    }
    next[i] = here;
}

fn step_ok(variant: Variant, c: &[usize], holder: &[usize], next: &[usize]) -> bool {
    if variant == Variant::Mapf {
        return true;
    }
    c.iter().zip(next).all(|(&from, &to)| {
        if from == to {
            return true;
        }
        let j = holder[to];
        let back = next[j] == from;
        next[j] != to
            && match variant {
                Variant::Tswap => back,
                Variant::Trot => !back,
                _ => true,
            }
    })
}

/// Whether the goal configuration is reachable at all; `None` when more
/// than `max_states` configurations would have to be visited.
pub fn reachable(inst: &Instance, max_states: usize) -> Option<bool> {
    let start = inst.start().to_vec();
    let goal = inst.goal().to_vec();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            return Some(true);
        }
        for s in successors(inst, &c) {
            if !seen.contains(&s) {
                if seen.len() >= max_states {
                    return None;
                }
                seen.insert(s.clone());
                queue.push_back(s);
            }
        }
    }
    Some(false)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct JointState {
    at: Configuration,
    /// Free waits an item has banked at its goal since it last arrived.
    banked: Vec<u32>,
}

/// Minimum sum-of-costs plan by Dijkstra over joint states.
///
/// An item off its goal pays 1 per step. An item resting on its goal pays
/// nothing but banks the wait, and pays the whole bank plus one when it
/// leaves again, so path costs match trailing-wait-free accounting exactly.
pub fn oracle_solve(inst: &Instance, limits: &OracleLimits) -> Result<OracleOutcome> {
    if inst.num_vertices() > limits.max_vertices || inst.num_items() > limits.max_items {
        return Err(invalid(format!(
            "oracle handles at most {} vertices and {} items",
            limits.max_vertices, limits.max_items
        )));
    }
    match reachable(inst, limits.max_states) {
        None => return Ok(OracleOutcome::Limit),
        Some(false) => return Ok(OracleOutcome::Unsolvable),
        Some(true) => {}
    }
    let goal = inst.goal();
    let k = inst.num_items();
    let mut states: Vec<JointState> = vec![JointState {
        at: inst.start().to_vec(),
        banked: vec![0; k],
    }];
    let mut index: HashMap<JointState, usize> = HashMap::from([(states[0].clone(), 0)]);
    let mut best: Vec<Cost> = vec![0];
    let mut parent: Vec<usize> = vec![usize::MAX];
    let mut heap = BinaryHeap::from([Reverse((0 as Cost, 0usize))]);
    while let Some(Reverse((cost, s))) = heap.pop() {
        if cost > best[s] {
            continue;
        }
        if states[s].at == goal {
            let mut configs = vec![states[s].at.clone()];
            let mut cur = s;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                configs.push(states[cur].at.clone());
            }
            configs.reverse();
            let paths = (0..k).map(|i| configs.iter().map(|c| c[i]).collect()).collect();
            return Ok(OracleOutcome::Solved {
                cost,
                plan: Plan::new(paths)?,
            });
        }
        let current = states[s].clone();
        for next in successors(inst, &current.at) {
            let mut step = 0;
            let mut banked = vec![0; k];
            for i in 0..k {
                let on_goal = current.at[i] == goal[i];
                if on_goal && next[i] == goal[i] {
                    banked[i] = current.banked[i] + 1;
                } else if on_goal {
                    step += current.banked[i] + 1;
                } else {
                    step += 1;
                }
            }
            let state = JointState { at: next, banked };
            let total = cost + step;
            let id = match index.get(&state) {
                Some(&id) => {
                    if total >= best[id] {
                        continue;
                    }
                    best[id] = total;
                    parent[id] = s;
                    id
                }
                None => {
                    if states.len() >= limits.max_states {
                        return Ok(OracleOutcome::Limit);
                    }
                    let id = states.len();
                    index.insert(state.clone(), id);
                    states.push(state);
                    best.push(total);
                    parent.push(s);
                    id
                }
            };
            heap.push(Reverse((total, id)));
        }
    }
    Ok(OracleOutcome::Unsolvable)
}
