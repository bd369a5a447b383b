//! Single-item shortest paths in the time-expanded graph under CBS
//! constraints.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use crate::graphs::{DistTable, Graph, UNREACHABLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Forbid,
    Require,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    /// Being at `v` at time `t`.
    Vertex { v: usize, t: usize },
    /// Moving `from -> to`, leaving at `t`.
    Edge { from: usize, to: usize, t: usize },
}

impl Place {
    pub fn time(&self) -> usize {
        match *self {
            Place::Vertex { t, .. } | Place::Edge { t, .. } => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub item: usize,
    pub polarity: Polarity,
    pub place: Place,
}

impl Constraint {
    pub fn forbid_vertex(item: usize, v: usize, t: usize) -> Constraint {
        Constraint {
            item,
            polarity: Polarity::Forbid,
            place: Place::Vertex { v, t },
        }
    }

    pub fn forbid_edge(item: usize, from: usize, to: usize, t: usize) -> Constraint {
        Constraint {
            item,
            polarity: Polarity::Forbid,
            place: Place::Edge { from, to, t },
        }
    }

    pub fn require_vertex(item: usize, v: usize, t: usize) -> Constraint {
        Constraint {
            item,
            polarity: Polarity::Require,
            place: Place::Vertex { v, t },
        }
    }

    pub fn require_edge(item: usize, from: usize, to: usize, t: usize) -> Constraint {
        Constraint {
            item,
            polarity: Polarity::Require,
            place: Place::Edge { from, to, t },
        }
    }

    /// Whether `path` (resting at its last vertex forever) honors the constraint.
    pub fn is_satisfied_by(&self, path: &[usize]) -> bool {
        let at = |t: usize| path[t.min(path.len() - 1)];
        let holds = match self.place {
            Place::Vertex { v, t } => at(t) == v,
            Place::Edge { from, to, t } => at(t) == from && at(t + 1) == to,
        };
        holds == (self.polarity == Polarity::Require)
    }
}

/// Constraint collection; duplicates collapse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ConstraintSet {
    set: BTreeSet<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> ConstraintSet {
        ConstraintSet::default()
    }

    pub fn insert(&mut self, c: Constraint) -> bool {
        self.set.insert(c)
    }

    pub fn contains(&self, c: &Constraint) -> bool {
        self.set.contains(c)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.set.iter()
    }

    pub fn for_item(&self, item: usize) -> impl Iterator<Item = &Constraint> {
        self.set.iter().filter(move |c| c.item == item)
    }

    /// Latest time step mentioned by any constraint (edge arrivals included).
    pub fn max_time(&self) -> usize {
        self.set
            .iter()
            .map(|c| match c.place {
                Place::Vertex { t, .. } => t,
                Place::Edge { t, .. } => t + 1,
            })
            .max()
            .unwrap_or(0)
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        ConstraintSet {
            set: iter.into_iter().collect(),
        }
    }
}

/// Cheapest path from `start` to `goal` for `item` that honors every
/// constraint of `cs` and can rest at `goal` from its arrival on. Arrival
/// must happen by `horizon`. A* over (vertex, time) with heuristic
/// `dist(., goal)`; ties go to the earlier time, then the smaller vertex.
pub fn constrained_shortest_path(
    g: &Graph,
    dt: &DistTable,
    item: usize,
    start: usize,
    goal: usize,
    cs: &ConstraintSet,
    horizon: usize,
) -> Option<Vec<usize>> {
    if dt.get(start, goal) == UNREACHABLE {
        return None;
    }
    let mut forbid_at = HashSet::new();
    let mut forbid_move = HashSet::new();
    let mut required: HashMap<usize, usize> = HashMap::new();
    let mut rest_from = 0usize;
    for c in cs.for_item(item) {
        let mut require = |v: usize, t: usize| match required.insert(t, v) {
            Some(w) => w == v,
            None => true,
        };
        match (c.polarity, c.place) {
            (Polarity::Forbid, Place::Vertex { v, t }) => {
                forbid_at.insert((v, t));
                if v == goal {
                    rest_from = rest_from.max(t + 1);
                }
            }
            (Polarity::Forbid, Place::Edge { from, to, t }) => {
                forbid_move.insert((from, to, t));
            }
            (Polarity::Require, Place::Vertex { v, t }) => {
                if !require(v, t) {
                    return None;
                }
                if v != goal {
                    rest_from = rest_from.max(t + 1);
                }
            }
            (Polarity::Require, Place::Edge { from, to, t }) => {
                if !require(from, t) || !require(to, t + 1) {
                    return None;
                }
                rest_from = rest_from.max(t + 1);
            }
        }
    }
    if rest_from > horizon {
        return None;
    }
    // Requirements sorted by time, to prune states that cannot make the next one.
    let mut milestones: Vec<(usize, usize)> = required.iter().map(|(&t, &v)| (t, v)).collect();
    milestones.sort_unstable();

    let admissible = |v: usize, t: usize| -> bool {
        if forbid_at.contains(&(v, t)) {
            return false;
        }
        if let Some(&w) = required.get(&t) {
            if w != v {
                return false;
            }
        }
        let i = milestones.partition_point(|&(tm, _)| tm < t);
        if let Some(&(tm, w)) = milestones.get(i) {
            let d = dt.get(v, w);
            if d == UNREACHABLE || d as usize > tm - t {
                return false;
            }
        }
        true
    };

    if !admissible(start, 0) {
        return None;
    }
    let n = g.num_vertices();
    let idx = |v: usize, t: usize| t * n + v;
    let mut parent = vec![usize::MAX; (horizon + 1) * n];
    let mut closed = vec![false; (horizon + 1) * n];
    let mut open = BinaryHeap::new();
    let h = |v: usize| dt.get(v, goal) as usize;
    parent[idx(start, 0)] = start;
    open.push(Reverse((h(start), 0usize, start)));
    while let Some(Reverse((_, t, v))) = open.pop() {
        if closed[idx(v, t)] {
            continue;
        }
        closed[idx(v, t)] = true;
        if v == goal && t >= rest_from {
            let mut path = vec![v; t + 1];
            let mut cur = v;
            for s in (1..=t).rev() {
                cur = parent[idx(cur, s)];
                path[s - 1] = cur;
            }
            return Some(path);
        }
        if t == horizon {
            continue;
        }
        let nt = t + 1;
        for w in std::iter::once(v).chain(g.neighbors(v).iter().copied()) {
            if w != v && forbid_move.contains(&(v, w, t)) {
                continue;
            }
            let d = h(w);
            if d == UNREACHABLE as usize || nt + d > horizon {
                continue;
            }
            let j = idx(w, nt);
            if parent[j] != usize::MAX || !admissible(w, nt) {
                continue;
            }
            parent[j] = v;
            open.push(Reverse((nt + d, nt, w)));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{all_pairs_distances, make_grid};

    fn path3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn run(g: &Graph, start: usize, goal: usize, cs: &ConstraintSet, horizon: usize) -> Option<Vec<usize>> {
        constrained_shortest_path(g, &all_pairs_distances(g), 0, start, goal, cs, horizon)
    }

    #[test]
    fn unconstrained_is_geodesic() {
        let g = make_grid(4, 4).unwrap();
        let p = run(&g, 0, 15, &ConstraintSet::new(), 20).unwrap();
        assert_eq!(p.len(), 7);
        assert_eq!((p[0], p[6]), (0, 15));
    }

    #[test]
    fn vertex_constraint_forces_wait() {
        let cs = ConstraintSet::from_iter([Constraint::forbid_vertex(0, 1, 1)]);
        assert_eq!(run(&path3(), 0, 2, &cs, 10), Some(vec![0, 0, 1, 2]));
    }

    #[test]
    fn horizon_bounds_the_search() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let cs = ConstraintSet::from_iter([Constraint::forbid_edge(0, 0, 1, 0), Constraint::forbid_vertex(0, 0, 2)]);
        assert_eq!(run(&g, 0, 1, &cs, 2), Some(vec![0, 0, 1]));
        assert_eq!(run(&g, 0, 1, &cs, 1), None);
    }

    #[test]
    fn later_goal_constraint_delays_arrival() {
        let cs = ConstraintSet::from_iter([Constraint::forbid_vertex(0, 2, 5)]);
        let p = run(&path3(), 0, 2, &cs, 10).unwrap();
        assert_eq!(p.len(), 7);
        assert!(cs.iter().all(|c| c.is_satisfied_by(&p)));
    }

    #[test]
    fn requirements_are_met() {
        let g = make_grid(3, 3).unwrap();
        let cs = ConstraintSet::from_iter([Constraint::require_edge(0, 6, 7, 3)]);
        let p = run(&g, 0, 2, &cs, 20).unwrap();
        assert_eq!((p[3], p[4]), (6, 7));
        assert_eq!(p.len() - 1, 7);
        let clash = ConstraintSet::from_iter([Constraint::require_vertex(0, 1, 2), Constraint::require_vertex(0, 3, 2)]);
        assert_eq!(run(&g, 0, 2, &clash, 20), None);
    }

    #[test]
    fn unreachable_goal() {
        let g = Graph::new(2, []).unwrap();
        assert_eq!(run(&g, 0, 1, &ConstraintSet::new(), 5), None);
    }
}
