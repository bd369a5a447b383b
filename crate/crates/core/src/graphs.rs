//! Undirected unit-weight graphs and the benchmark families built on them.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Distance reported for vertex pairs in different components.
pub const UNREACHABLE: u32 = u32::MAX;

/// A simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and endpoints
    /// outside `0..n`. Edges are stored normalized as `(min, max)` and sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({u},{v}) outside 0..{n}")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(invalid(format!("duplicate edge ({u},{v})")));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
            adjacency,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Components as sorted vertex lists, ordered by smallest vertex.
    pub fn components_of(&self, vertices: &[usize]) -> Vec<Vec<usize>> {
        let mut inside = vec![false; self.n];
        for &v in vertices {
            inside[v] = true;
        }
        let mut seen = vec![false; self.n];
        let mut sorted = vertices.to_vec();
        sorted.sort_unstable();
        let mut out = Vec::new();
        for &s in &sorted {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    if inside[w] && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// All-pairs hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistTable {
    n: usize,
    dist: Vec<u32>,
}

impl DistTable {
    /// Hop distance, or [`UNREACHABLE`].
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.dist[u * self.n + v]
    }

    pub fn reachable(&self, u: usize, v: usize) -> bool {
        self.get(u, v) != UNREACHABLE
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }
}

/// One BFS per source.
pub fn all_pairs_distances(g: &Graph) -> DistTable {
    let n = g.num_vertices();
    let mut dist = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for &w in g.neighbors(u) {
                if row[w] == UNREACHABLE {
                    row[w] = du + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    DistTable { n, dist }
}

/// 4-connected grid, vertices numbered row-major (`y * width + x`).
pub fn make_grid(width: usize, height: usize) -> Result<Graph> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let v = y * width + x;
            if x + 1 < width {
                edges.push((v, v + 1));
            }
            if y + 1 < height {
                edges.push((v, v + width));
            }
        }
    }
    Graph::new(width * height, edges)
}

/// Connected random graph: a uniformly random recursive spanning tree plus
/// `floor(extra_fraction * n(n-1)/2)` extra distinct edges drawn uniformly
/// from the non-tree pairs (capped at the number of such pairs).
pub fn make_random(n: usize, extra_fraction: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("random graph needs at least one vertex"));
    }
    if !(0.0..=1.0).contains(&extra_fraction) {
        return Err(invalid(format!("extra edge fraction {extra_fraction} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut tree = BTreeSet::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let child = order[i];
        tree.insert((parent.min(child), parent.max(child)));
    }
    let pairs = n * (n - 1) / 2;
    let wanted = (extra_fraction * pairs as f64 + 1e-9).floor() as usize;
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|e| !tree.contains(e))
        .collect();
    candidates.shuffle(&mut rng);
    candidates.truncate(wanted);
    Graph::new(n, tree.into_iter().chain(candidates))
}

/// Star with hub 0.
pub fn make_star(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("star needs at least one vertex"));
    }
    Graph::new(n, (1..n).map(|i| (0, i)))
}

pub fn make_clique(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("clique needs at least one vertex"));
    }
    Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}
