//! Conflict-Based Search over a constraint tree.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::pathfinder::{constrained_shortest_path, Constraint, ConstraintSet};
use crate::relocation::{path_cost, validate, Collision, Cost, Instance, Plan};
use crate::solvers::{cost_bounds, deadline_of, expired, Algorithm, Bounds, Outcome, Report, SolveStats, SolverConfig};

#[derive(Debug, Clone)]
pub struct CtNode {
    pub constraints: ConstraintSet,
    pub paths: Vec<Vec<usize>>,
    pub cost: Cost,
}

impl CtNode {
    fn plan(&self) -> Result<Plan> {
        Plan::from_ragged(self.paths.clone())
    }
}

/// The alternative constraints a collision splits into; every valid plan
/// satisfies at least one of them and the current paths satisfy none.
pub fn branches(inst: &Instance, collision: &Collision) -> Vec<Constraint> {
    let dt = inst.dist();
    let could_be_at = |j: usize, v: usize, t: usize| dt.get(inst.start()[j], v) as usize <= t;
    match *collision {
        Collision::Vertex { a, b, v, t } => {
            vec![Constraint::forbid_vertex(a, v, t), Constraint::forbid_vertex(b, v, t)]
        }
        Collision::Occupancy {
            mover, occupant, to, t, ..
        } => vec![
            Constraint::forbid_vertex(mover, to, t + 1),
            Constraint::forbid_vertex(occupant, to, t),
        ],
        Collision::Edge { a, b, from, to, t } => vec![
            Constraint::forbid_edge(a, from, to, t),
            Constraint::forbid_edge(b, to, from, t),
        ],
        Collision::Unswapped { item, from, to, t, .. } => {
            let mut out = vec![Constraint::forbid_edge(item, from, to, t)];
            out.extend(
                (0..inst.num_items())
                    .filter(|&j| j != item && could_be_at(j, to, t))
                    .map(|j| Constraint::require_edge(j, to, from, t)),
            );
            out
        }
        Collision::Vacant { item, from, to, t } => {
            let mut out = vec![Constraint::forbid_edge(item, from, to, t)];
            out.extend(
                (0..inst.num_items())
                    .filter(|&j| j != item && could_be_at(j, to, t))
                    .map(|j| Constraint::require_vertex(j, to, t)),
            );
            out
        }
    }
}

fn low_level(inst: &Instance, item: usize, cs: &ConstraintSet, stats: &mut SolveStats) -> Option<Vec<usize>> {
    stats.low_level_calls += 1;
    let horizon = cs.max_time() + inst.num_vertices() + 1;
    constrained_shortest_path(
        inst.graph(),
        inst.dist(),
        item,
        inst.start()[item],
        inst.goal()[item],
        cs,
        horizon,
    )
}

pub fn cbs_solve(inst: &Instance, config: &SolverConfig) -> Result<Report> {
    let started = Instant::now();
    let deadline = deadline_of(config);
    let mut stats = SolveStats::new(Algorithm::Cbs);
    let ceiling = match cost_bounds(inst) {
        Bounds::Unsolvable => return Ok(Report::finish(Outcome::Unsolvable, stats, started)),
        Bounds::Search { ceiling, .. } => ceiling,
    };
    let constraints = ConstraintSet::new();
    let mut paths = Vec::with_capacity(inst.num_items());
    for i in 0..inst.num_items() {
        match low_level(inst, i, &constraints, &mut stats) {
            Some(p) => paths.push(p),
            None => return Ok(Report::finish(Outcome::Unsolvable, stats, started)),
        }
    }
    let cost = paths.iter().map(|p| path_cost(p)).sum();
    let mut nodes = vec![CtNode {
        constraints,
        paths,
        cost,
    }];
    let root_collisions = validate(inst, &nodes[0].plan()?)?;
    let mut open = BinaryHeap::from([Reverse((cost, root_collisions.len(), 0usize))]);
    let mut first_collision = vec![root_collisions.into_iter().next()];
    stats.ct_generated = 1;
    while let Some(Reverse((cost, _, id))) = open.pop() {
        if expired(deadline) {
            return Ok(Report::finish(Outcome::Timeout, stats, started));
        }
        if ceiling.is_some_and(|c| cost > c) {
            break;
        }
        stats.ct_nodes += 1;
        let Some(collision) = first_collision[id].take() else {
            let plan = nodes[id].plan()?;
            stats.cost = Some(cost);
            return Ok(Report::finish(Outcome::Solved(plan), stats, started));
        };
        let parent = std::mem::replace(
            &mut nodes[id],
            CtNode {
                constraints: ConstraintSet::new(),
                paths: Vec::new(),
                cost: 0,
            },
        );
        for constraint in branches(inst, &collision) {
            let mut cs = parent.constraints.clone();
            if !cs.insert(constraint) {
                return Err(Error::Internal(format!("constraint {constraint:?} already present")));
            }
            let Some(path) = low_level(inst, constraint.item, &cs, &mut stats) else {
                continue;
            };
            let mut paths = parent.paths.clone();
            paths[constraint.item] = path;
            let cost = paths.iter().map(|p| path_cost(p)).sum();
            let child = CtNode {
                constraints: cs,
                paths,
                cost,
            };
            let collisions = validate(inst, &child.plan()?)?;
            let child_id = nodes.len();
            open.push(Reverse((cost, collisions.len(), child_id)));
            first_collision.push(collisions.into_iter().next());
            nodes.push(child);
            stats.ct_generated += 1;
        }
    }
    Ok(Report::finish(Outcome::Unsolvable, stats, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{make_grid, Graph};
    use crate::relocation::Variant;

    #[test]
    fn single_agent_geodesic() {
        let inst = Instance::new(make_grid(4, 4).unwrap(), Variant::Mapf, vec![0], vec![15]).unwrap();
        let r = cbs_solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(r.cost(), Some(6));
        assert_eq!(r.stats.ct_nodes, 1);
    }

    #[test]
    fn swap_solved_at_root() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let inst = Instance::new(g, Variant::Tswap, vec![0, 1], vec![1, 0]).unwrap();
        let r = cbs_solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!((r.cost(), r.stats.ct_nodes), (Some(2), 1));
        let trot = inst.with_variant(Variant::Trot).unwrap();
        assert_eq!(cbs_solve(&trot, &SolverConfig::default()).unwrap().outcome, Outcome::Unsolvable);
    }

    #[test]
    fn blocked_corridor() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(g, Variant::Mapf, vec![0, 2], vec![2, 0]).unwrap();
        assert_eq!(cbs_solve(&inst, &SolverConfig::default()).unwrap().outcome, Outcome::Unsolvable);
    }

    #[test]
    fn stepping_aside() {
        let g = Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let inst = Instance::new(g, Variant::Mapf, vec![1, 0], vec![1, 2]).unwrap();
        let r = cbs_solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(r.cost(), Some(7));
        assert!(validate(&inst, r.plan().unwrap()).unwrap().is_empty());
    }
}
