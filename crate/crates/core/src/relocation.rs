//! The common item-relocation model: variants, instances, plans and the
//! per-step movement rules that decide whether a plan is a solution.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graphs::{all_pairs_distances, DistTable, Graph, UNREACHABLE};

/// Sum-of-costs.
pub type Cost = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Agents move into vertices that were empty.
    Mapf,
    /// Tokens swap across disjoint edges.
    Tswap,
    /// Tokens rotate along disjoint cycles of length at least 3.
    Trot,
    /// Tokens permute along disjoint cycles of length at least 2.
    Tperm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Mapf, Variant::Tswap, Variant::Trot, Variant::Tperm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mapf => "mapf",
            Variant::Tswap => "tswap",
            Variant::Trot => "trot",
            Variant::Tperm => "tperm",
        }
    }

    pub fn is_token(self) -> bool {
        self != Variant::Mapf
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s.to_ascii_lowercase().as_str() {
            "mapf" => Ok(Variant::Mapf),
            "tswap" => Ok(Variant::Tswap),
            "trot" => Ok(Variant::Trot),
            "tperm" => Ok(Variant::Tperm),
            _ => Err(invalid(format!("unknown variant {s:?}"))),
        }
    }
}

/// Item id to vertex id. Valid configurations are injective.
pub type Configuration = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    graph: Graph,
    dist: DistTable,
    variant: Variant,
    start: Configuration,
    goal: Configuration,
}

fn check_configuration(g: &Graph, c: &[usize], what: &str) -> Result<()> {
    let mut used = vec![false; g.num_vertices()];
    for (i, &v) in c.iter().enumerate() {
        if v >= g.num_vertices() {
            return Err(invalid(format!("{what}: item {i} at vertex {v} outside the graph")));
        }
        if std::mem::replace(&mut used[v], true) {
            return Err(invalid(format!("{what}: vertex {v} holds two items")));
        }
    }
    Ok(())
}

impl Instance {
    pub fn new(graph: Graph, variant: Variant, start: Configuration, goal: Configuration) -> Result<Instance> {
        if start.len() != goal.len() {
            return Err(invalid(format!(
                "start places {} items but goal places {}",
                start.len(),
                goal.len()
            )));
        }
        let n = graph.num_vertices();
        if variant == Variant::Mapf && start.len() >= n {
            return Err(invalid(format!("mapf needs fewer agents than vertices ({} >= {n})", start.len())));
        }
        if start.len() > n {
            return Err(invalid(format!("{} tokens do not fit on {n} vertices", start.len())));
        }
        check_configuration(&graph, &start, "start")?;
        check_configuration(&graph, &goal, "goal")?;
        let dist = all_pairs_distances(&graph);
        Ok(Instance {
            graph,
            dist,
            variant,
            start,
            goal,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dist(&self) -> &DistTable {
        &self.dist
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn with_variant(&self, variant: Variant) -> Result<Instance> {
        Instance::new(self.graph.clone(), variant, self.start.clone(), self.goal.clone())
    }

    pub fn num_items(&self) -> usize {
        self.start.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn start(&self) -> &[usize] {
        &self.start
    }

    pub fn goal(&self) -> &[usize] {
        &self.goal
    }

    /// Shortest-path distance of every item, `UNREACHABLE` if cut off.
    pub fn item_distances(&self) -> Vec<u32> {
        (0..self.num_items())
            .map(|i| self.dist.get(self.start[i], self.goal[i]))
            .collect()
    }

    /// Sum of individual distances; `None` when some item cannot reach its goal.
    pub fn lower_bound(&self) -> Option<Cost> {
        self.item_distances()
            .into_iter()
            .try_fold(0u32, |acc, d| (d != UNREACHABLE).then(|| acc.saturating_add(d)))
    }
}

/// One vertex sequence per item, all of length `makespan + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    paths: Vec<Vec<usize>>,
}

impl Plan {
    pub fn new(paths: Vec<Vec<usize>>) -> Result<Plan> {
        if let Some(first) = paths.first() {
            if first.is_empty() {
                return Err(invalid("plan paths must contain at least the start vertex"));
            }
            if let Some(i) = paths.iter().position(|p| p.len() != first.len()) {
                return Err(invalid(format!(
                    "path of item {i} has length {} but item 0 has {}",
                    paths[i].len(),
                    first.len()
                )));
            }
        }
        Ok(Plan { paths })
    }

    /// Pads every path with waits at its last vertex up to a common length.
    pub fn from_ragged(mut paths: Vec<Vec<usize>>) -> Result<Plan> {
        let len = paths.iter().map(Vec::len).max().unwrap_or(0);
        for p in &mut paths {
            let Some(&last) = p.last() else {
                return Err(invalid("plan paths must contain at least the start vertex"));
            };
            p.resize(len, last);
        }
        Plan::new(paths)
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn num_items(&self) -> usize {
        self.paths.len()
    }

    pub fn makespan(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len() - 1)
    }

    pub fn configuration(&self, t: usize) -> Configuration {
        self.paths.iter().map(|p| p[t]).collect()
    }

    pub fn cost(&self) -> Cost {
        plan_cost(self)
    }

    /// Appends `extra` waits to every path.
    pub fn extended(&self, extra: usize) -> Plan {
        let paths = self
            .paths
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.resize(p.len() + extra, *p.last().unwrap());
                p
            })
            .collect();
        Plan { paths }
    }
}

/// Steps an item spends before it settles for good at the end of its path.
pub fn path_cost(path: &[usize]) -> Cost {
    let Some(&last) = path.last() else { return 0 };
    let settled = path.iter().rposition(|&v| v != last).map_or(0, |t| t + 1);
    settled as Cost
}

pub fn plan_cost(p: &Plan) -> Cost {
    p.paths.iter().map(|path| path_cost(path)).sum()
}

/// A violation of the movement rules in the step from time `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Collision {
    /// `a < b` both occupy `v` at time `t`.
    Vertex { a: usize, b: usize, v: usize, t: usize },
    /// `mover` leaves `from` for `to` at `t` while `occupant` sits on `to` at `t`.
    Occupancy {
        mover: usize,
        occupant: usize,
        from: usize,
        to: usize,
        t: usize,
    },
    /// `a < b` traverse `from -> to` and `to -> from` at `t`.
    Edge {
        a: usize,
        b: usize,
        from: usize,
        to: usize,
        t: usize,
    },
    /// `item` moves `from -> to` at `t` without the occupant of `to`
    /// (if any) moving the other way.
    Unswapped {
        item: usize,
        occupant: Option<usize>,
        from: usize,
        to: usize,
        t: usize,
    },
    /// `item` moves into `to`, which was empty at `t`.
    Vacant {
        item: usize,
        from: usize,
        to: usize,
        t: usize,
    },
}

impl Collision {
    /// Index of the step (`t -> t + 1`) the collision belongs to.
    pub fn step(&self) -> usize {
        match *self {
            Collision::Vertex { t, .. } => t.saturating_sub(1),
            Collision::Occupancy { t, .. }
            | Collision::Edge { t, .. }
            | Collision::Unswapped { t, .. }
            | Collision::Vacant { t, .. } => t,
        }
    }

    pub fn items(&self) -> Vec<usize> {
        match *self {
            Collision::Vertex { a, b, .. } | Collision::Edge { a, b, .. } => vec![a, b],
            Collision::Occupancy { mover, occupant, .. } => vec![mover, occupant],
            Collision::Unswapped { item, occupant, .. } => {
                let mut v = vec![item];
                v.extend(occupant);
                v
            }
            Collision::Vacant { item, .. } => vec![item],
        }
    }

    fn order_key(&self) -> (usize, usize) {
        (self.step(), self.items().into_iter().min().unwrap_or(0))
    }
}

/// Collisions of a single step under the instance's variant, stamped with
/// step index `t`. Waits and edge moves only; anything else is an error.
pub fn step_legal(inst: &Instance, c: &[usize], next: &[usize], t: usize) -> Result<Vec<Collision>> {
    let k = inst.num_items();
    if c.len() != k || next.len() != k {
        return Err(invalid(format!(
            "configurations place {} and {} items, instance has {k}",
            c.len(),
            next.len()
        )));
    }
    let g = inst.graph();
    let n = g.num_vertices();
    for i in 0..k {
        if c[i] >= n || next[i] >= n {
            return Err(invalid(format!("item {i} placed outside the graph")));
        }
        if c[i] != next[i] && !g.has_edge(c[i], next[i]) {
            return Err(invalid(format!(
                "item {i} jumps from {} to {} at step {t}, which is not an edge",
                c[i], next[i]
            )));
        }
    }
    let mut before = vec![usize::MAX; n];
    for (i, &v) in c.iter().enumerate() {
        before[v] = i;
    }
    let occupant = |v: usize| (before[v] != usize::MAX).then_some(before[v]);

    let mut out = Vec::new();
    let mut after: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &v) in next.iter().enumerate() {
        after[v].push(i);
    }
    for (v, items) in after.iter().enumerate() {
        for x in 0..items.len() {
            for y in x + 1..items.len() {
                out.push(Collision::Vertex {
                    a: items[x],
                    b: items[y],
                    v,
                    t: t + 1,
                });
            }
        }
    }

    for i in 0..k {
        let (from, to) = (c[i], next[i]);
        if from == to {
            continue;
        }
        let occ = occupant(to);
        match inst.variant() {
            Variant::Mapf => {
                if let Some(j) = occ {
                    out.push(Collision::Occupancy {
                        mover: i,
                        occupant: j,
                        from,
                        to,
                        t,
                    });
                }
            }
            Variant::Tswap => {
                if !occ.is_some_and(|j| next[j] == from) {
                    out.push(Collision::Unswapped {
                        item: i,
                        occupant: occ,
                        from,
                        to,
                        t,
                    });
                }
            }
            Variant::Trot | Variant::Tperm => match occ {
                None => out.push(Collision::Vacant { item: i, from, to, t }),
                Some(j) => {
                    if inst.variant() == Variant::Trot && next[j] == from && i < j {
                        out.push(Collision::Edge {
                            a: i,
                            b: j,
                            from,
                            to,
                            t,
                        });
                    }
                }
            },
        }
    }
    out.sort_by_cached_key(|col| (col.order_key(), col.clone()));
    Ok(out)
}

/// All collisions of a plan, in step then smallest-item order. Empty iff the
/// plan solves the instance.
pub fn validate(inst: &Instance, p: &Plan) -> Result<Vec<Collision>> {
    if p.num_items() != inst.num_items() {
        return Err(invalid(format!(
            "plan has {} items, instance has {}",
            p.num_items(),
            inst.num_items()
        )));
    }
    if inst.num_items() == 0 {
        return Ok(Vec::new());
    }
    let mu = p.makespan();
    for (i, path) in p.paths().iter().enumerate() {
        if path[0] != inst.start()[i] || path[mu] != inst.goal()[i] {
            return Err(invalid(format!("path of item {i} does not connect its start and goal")));
        }
    }
    let mut out = Vec::new();
    let mut current = p.configuration(0);
    for t in 0..mu {
        let next = p.configuration(t + 1);
        out.extend(step_legal(inst, &current, &next, t)?);
        current = next;
    }
    Ok(out)
}

/// Random instance with `k` items on `g`, reproducible per seed.
///
/// Starts are uniform injective placements. MAPF goals are independent
/// uniform placements. Token goals are reachable rearrangements of the
/// occupied vertices: a uniform permutation inside every connected part of
/// the occupied subgraph for TSWAP and TPERM, and a random sequence of
/// rotations along cycles of length at least 3 for TROT.
pub fn random_instance(g: &Graph, variant: Variant, k: usize, seed: u64) -> Result<Instance> {
    let n = g.num_vertices();
    if k == 0 {
        return Err(invalid("need at least one item"));
    }
    if variant == Variant::Mapf && k >= n {
        return Err(invalid(format!("mapf needs fewer agents than vertices ({k} >= {n})")));
    }
    if k > n {
        return Err(invalid(format!("{k} tokens do not fit on {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<usize> = (0..n).collect();
    let start: Vec<usize> = if variant.is_token() {
        connected_region(g, k, &mut rng)
    } else {
        let mut v = vertices.clone();
        v.partial_shuffle(&mut rng, k).0.to_vec()
    };
    let goal = match variant {
        Variant::Mapf => {
            let mut v = vertices;
            v.partial_shuffle(&mut rng, k).0.to_vec()
        }
        Variant::Tswap | Variant::Tperm => permute_components(g, &start, &mut rng),
        Variant::Trot => rotate_randomly(g, &start, &mut rng),
    };
    Instance::new(g.clone(), variant, start, goal)
}

/// `k` vertices in random order, grown as a connected blob from a random
/// seed vertex; a new seed is drawn only when a component is exhausted.
fn connected_region(g: &Graph, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.num_vertices();
    let mut taken = vec![false; n];
    let mut in_frontier = vec![false; n];
    let mut region = Vec::with_capacity(k);
    let mut frontier: Vec<usize> = Vec::new();
    while region.len() < k {
        let v = if frontier.is_empty() {
            let free: Vec<usize> = (0..n).filter(|&v| !taken[v]).collect();
            free[rng.gen_range(0..free.len())]
        } else {
            frontier.swap_remove(rng.gen_range(0..frontier.len()))
        };
        taken[v] = true;
        region.push(v);
        for &w in g.neighbors(v) {
            if !taken[w] && !in_frontier[w] {
                in_frontier[w] = true;
                frontier.push(w);
            }
        }
    }
    region.shuffle(rng);
    region
}

fn permute_components(g: &Graph, start: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut holder = vec![usize::MAX; g.num_vertices()];
    for (i, &v) in start.iter().enumerate() {
        holder[v] = i;
    }
    let mut goal = start.to_vec();
    for comp in g.components_of(start) {
        let mut targets = comp.clone();
        targets.shuffle(rng);
        for (&v, &w) in comp.iter().zip(&targets) {
            goal[holder[v]] = w;
        }
    }
    goal
}

fn rotate_randomly(g: &Graph, start: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.num_vertices();
    let mut occupied = vec![false; n];
    let mut holder = vec![usize::MAX; n];
    for (i, &v) in start.iter().enumerate() {
        occupied[v] = true;
        holder[v] = i;
    }
    for _ in 0..2 * start.len() {
        let from = start[rng.gen_range(0..start.len())];
        let Some(cycle) = random_cycle(g, &occupied, from, rng) else {
            continue;
        };
        let moved: Vec<usize> = cycle.iter().map(|&v| holder[v]).collect();
        for (idx, &item) in moved.iter().enumerate() {
            holder[cycle[(idx + 1) % cycle.len()]] = item;
        }
    }
    let mut goal = start.to_vec();
    for v in 0..n {
        if holder[v] != usize::MAX {
            goal[holder[v]] = v;
        }
    }
    goal
}

/// A simple cycle of length >= 3 through `from` inside the occupied
/// subgraph, found by a bounded randomized depth-first walk.
fn random_cycle(g: &Graph, occupied: &[bool], from: usize, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    const BUDGET: usize = 2000;
    let mut budget = BUDGET;
    let mut path = vec![from];
    let mut on_path = vec![false; g.num_vertices()];
    on_path[from] = true;
    fn dfs(
        g: &Graph,
        occupied: &[bool],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        budget: &mut usize,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let last = *path.last().unwrap();
        let mut next: Vec<usize> = g.neighbors(last).to_vec();
        next.shuffle(rng);
        for w in next {
            if w == path[0] && path.len() >= 3 {
                return true;
            }
            if occupied[w] && !on_path[w] {
                path.push(w);
                on_path[w] = true;
                if dfs(g, occupied, path, on_path, budget, rng) {
                    return true;
                }
                on_path[w] = false;
                path.pop();
            }
        }
        false
    }
    dfs(g, occupied, &mut path, &mut on_path, &mut budget, rng).then_some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{make_clique, make_grid, make_star};

    fn edge() -> Graph {
        Graph::new(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn variant_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("swap".parse::<Variant>().is_err());
    }

    #[test]
    fn costs() {
        let p = Plan::new(vec![vec![4, 4, 4, 4]]).unwrap();
        assert_eq!((plan_cost(&p), p.makespan()), (0, 3));
        let swap = Plan::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(plan_cost(&swap), 2);
        let detour = Plan::new(vec![vec![2, 5, 2]]).unwrap();
        assert_eq!(plan_cost(&detour), 2);
        assert_eq!(plan_cost(&detour.extended(4)), 2);
        assert!(Plan::new(vec![vec![0, 1], vec![1]]).is_err());
    }

    #[test]
    fn swap_rules() {
        let tswap = Instance::new(edge(), Variant::Tswap, vec![0, 1], vec![1, 0]).unwrap();
        assert!(step_legal(&tswap, &[0, 1], &[1, 0], 0).unwrap().is_empty());
        let trot = tswap.with_variant(Variant::Trot).unwrap();
        assert_eq!(
            step_legal(&trot, &[0, 1], &[1, 0], 0).unwrap(),
            vec![Collision::Edge {
                a: 0,
                b: 1,
                from: 0,
                to: 1,
                t: 0
            }]
        );
        let tperm = tswap.with_variant(Variant::Tperm).unwrap();
        let p = Plan::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(validate(&tperm, &p).unwrap().is_empty());
    }

    #[test]
    fn mapf_occupancy() {
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(path, Variant::Mapf, vec![0, 1], vec![1, 2]).unwrap();
        assert_eq!(
            step_legal(&inst, &[0, 1], &[1, 1], 0).unwrap(),
            vec![
                Collision::Vertex { a: 0, b: 1, v: 1, t: 1 },
                Collision::Occupancy {
                    mover: 0,
                    occupant: 1,
                    from: 0,
                    to: 1,
                    t: 0
                },
            ]
        );
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let swap = Instance::new(path, Variant::Mapf, vec![0, 1], vec![1, 0]).unwrap();
        let p = Plan::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let cols = validate(&swap, &p).unwrap();
        assert_eq!(cols.len(), 2);
        assert!(cols.iter().all(|c| matches!(c, Collision::Occupancy { t: 0, .. })));
    }

    #[test]
    fn triangle_rotation_is_legal() {
        let tri = make_clique(3).unwrap();
        let inst = Instance::new(tri, Variant::Trot, vec![0, 1, 2], vec![1, 2, 0]).unwrap();
        let p = Plan::new(vec![vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert!(validate(&inst, &p).unwrap().is_empty());
    }

    #[test]
    fn token_moves_into_empty_vertices_collide() {
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(path, Variant::Tperm, vec![0], vec![1]).unwrap();
        assert_eq!(
            step_legal(&inst, &[0], &[1], 0).unwrap(),
            vec![Collision::Vacant { item: 0, from: 0, to: 1, t: 0 }]
        );
        let inst = inst.with_variant(Variant::Tswap).unwrap();
        assert!(matches!(
            step_legal(&inst, &[0], &[1], 0).unwrap()[..],
            [Collision::Unswapped { occupant: None, .. }]
        ));
    }

    #[test]
    fn train_into_vacated_vertex_is_illegal_for_tperm() {
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(path, Variant::Tperm, vec![0, 1], vec![1, 2]).unwrap();
        let cols = step_legal(&inst, &[0, 1], &[1, 2], 0).unwrap();
        assert_eq!(cols, vec![Collision::Vacant { item: 1, from: 1, to: 2, t: 0 }]);
    }

    #[test]
    fn non_edge_moves_are_errors() {
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(path, Variant::Mapf, vec![0], vec![2]).unwrap();
        assert!(step_legal(&inst, &[0], &[2], 0).is_err());
        assert!(step_legal(&inst, &[0, 1], &[0, 1], 0).is_err());
        let wrong_end = Plan::new(vec![vec![0, 1]]).unwrap();
        assert!(validate(&inst, &wrong_end).is_err());
    }

    #[test]
    fn instance_validation() {
        let g = make_grid(8, 8).unwrap();
        assert!(random_instance(&g, Variant::Mapf, 64, 1).is_err());
        assert!(random_instance(&g, Variant::Tswap, 64, 1).is_ok());
        assert!(random_instance(&g, Variant::Tswap, 65, 1).is_err());
        assert!(Instance::new(edge(), Variant::Tswap, vec![0, 0], vec![0, 1]).is_err());
        assert!(Instance::new(edge(), Variant::Mapf, vec![0, 1], vec![1, 0]).is_err());
    }

    #[test]
    fn random_instances() {
        let tri = make_clique(3).unwrap();
        let inst = random_instance(&tri, Variant::Tswap, 3, 9).unwrap();
        let mut goal = inst.goal().to_vec();
        goal.sort_unstable();
        assert_eq!(goal, vec![0, 1, 2]);
        let star = make_star(8).unwrap();
        for v in Variant::ALL {
            let a = random_instance(&star, v, 4, 77).unwrap();
            assert_eq!(a, random_instance(&star, v, 4, 77).unwrap());
        }
    }

    #[test]
    fn token_goals_stay_on_occupied_vertices() {
        let g = make_grid(4, 4).unwrap();
        for v in [Variant::Tswap, Variant::Trot, Variant::Tperm] {
            for seed in 0..20 {
                let inst = random_instance(&g, v, 9, seed).unwrap();
                let mut s = inst.start().to_vec();
                let mut t = inst.goal().to_vec();
                s.sort_unstable();
                t.sort_unstable();
                assert_eq!(s, t);
            }
        }
    }
}
