//! Lazy A* over the leaves of a reduced tree, and path verification.
//!
//! Neighbors are generated only when a vertex is popped from OPEN, and a
//! vertex's occupancy is looked up the first time a g-value is computed for
//! it. Both are supplied by the caller, so the same search serves the
//! map-backed and the predicate-backed planner.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::index::NodeIndex;
use crate::neighbors::are_neighbors;
use crate::reduced::{ReducedTree, VertexId};
use crate::sampling::{exact_value, ObstaclePredicate};
use crate::tree::{is_eps_obstacle_value, OccupancyTree};

/// Edge cost `|c(u) - c(v)| * (1 + w V(v))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub weight: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { weight: 1.0 }
    }
}

impl CostModel {
    pub fn new(weight: f64) -> crate::Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(crate::Error::Parameter(format!(
                "cost weight must be a finite non-negative number, got {weight}"
            )));
        }
        Ok(CostModel { weight })
    }

    #[inline]
    pub fn edge_cost(&self, from: &NodeIndex, to: &NodeIndex, to_value: f64) -> f64 {
        from.distance(to) * (1.0 + self.weight * to_value)
    }

    /// Cost of a whole path, given the value of every node.
    pub fn path_cost(&self, path: &[NodeIndex], values: &[f64]) -> f64 {
        path.windows(2)
            .zip(&values[1.min(values.len())..])
            .map(|(w, &v)| self.edge_cost(&w[0], &w[1], v))
            .sum()
    }
}

/// Counters of one A* run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstarStats {
    /// Vertices removed from OPEN and expanded.
    pub pops: usize,
    pub neighbor_calls: usize,
    pub value_evals: usize,
    /// Size of OPEN ∪ CLOSED at the end of the run.
    pub touched: usize,
}

impl AstarStats {
    /// Neighbors were computed exactly for the expanded vertices and values
    /// only for touched ones.
    pub fn is_lazy(&self) -> bool {
        self.pops == self.neighbor_calls && self.value_evals <= self.touched
    }

    pub fn accumulate(&mut self, other: &AstarStats) {
        self.pops += other.pops;
        self.neighbor_calls += other.neighbor_calls;
        self.value_evals += other.value_evals;
        self.touched += other.touched;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AstarResult {
    /// Vertex path from start to goal, or `None` when OPEN ran dry.
    pub path: Option<Vec<VertexId>>,
    pub cost: f64,
    pub stats: AstarStats,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    f: f64,
    h: f64,
    g: f64,
    index: NodeIndex,
    id: VertexId,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so that the max-heap yields the smallest (f, h, index).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.index.cmp(&self.index))
            .then_with(|| other.g.total_cmp(&self.g))
    }
}

/// Reusable buffers for [`astar_lazy`], indexed by vertex id.
#[derive(Debug, Default)]
pub struct AstarWorkspace {
    stamp: Vec<u32>,
    epoch: u32,
    g: Vec<f64>,
    value: Vec<f64>,
    parent: Vec<VertexId>,
    closed: Vec<bool>,
    heap: BinaryHeap<Entry>,
    buf: Vec<VertexId>,
}

impl AstarWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, capacity: usize) {
        if self.stamp.len() < capacity {
            self.stamp.resize(capacity, 0);
            self.g.resize(capacity, 0.0);
            self.value.resize(capacity, 0.0);
            self.parent.resize(capacity, 0);
            self.closed.resize(capacity, false);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.heap.clear();
    }

    #[inline]
    fn seen(&self, id: VertexId) -> bool {
        self.stamp[id as usize] == self.epoch
    }
}

/// A* from `start` to `goal` over the leaves of `tree`.
///
/// * `excluded(id)` removes a vertex from the graph for this run.
/// * `neighbors(id, out)` appends the neighbors of `id`; it is called once
///   per expanded vertex.
/// * `value(id)` returns the occupancy used in edge costs, or `None` when
///   the vertex is an obstacle. It is called at most once per vertex, when
///   the vertex is first reached.
///
/// The heuristic is the Euclidean distance between centers, which never
/// exceeds the remaining cost since every edge costs at least its length.
#[allow(clippy::too_many_arguments)]
pub fn astar_lazy<X, N, V>(
    tree: &ReducedTree,
    start: VertexId,
    goal: VertexId,
    cost: &CostModel,
    ws: &mut AstarWorkspace,
    mut excluded: X,
    mut neighbors: N,
    mut value: V,
) -> Result<AstarResult>
where
    X: FnMut(VertexId) -> bool,
    N: FnMut(VertexId, &mut Vec<VertexId>) -> Result<()>,
    V: FnMut(VertexId) -> Option<f64>,
{
    let mut stats = AstarStats::default();
    if start == goal {
        stats.touched = 1;
        return Ok(AstarResult {
            path: Some(vec![start]),
            cost: 0.0,
            stats,
        });
    }
    ws.reset(tree.capacity());
    let goal_index = tree.index(goal);
    let start_index = tree.index(start);
    let s = start as usize;
    ws.stamp[s] = ws.epoch;
    ws.g[s] = 0.0;
    ws.closed[s] = false;
    ws.parent[s] = start;
    stats.touched = 1;
    let h0 = start_index.distance(&goal_index);
    ws.heap.push(Entry {
        f: h0,
        h: h0,
        g: 0.0,
        index: start_index,
        id: start,
    });
    let mut buf = std::mem::take(&mut ws.buf);
    let mut found = None;
    while let Some(top) = ws.heap.pop() {
        let u = top.id as usize;
        if ws.closed[u] || top.g > ws.g[u] {
            continue;
        }
        if top.id == goal {
            found = Some(top.g);
            break;
        }
        ws.closed[u] = true;
        stats.pops += 1;
        buf.clear();
        stats.neighbor_calls += 1;
        neighbors(top.id, &mut buf)?;
        for &n in &buf {
            let ni = n as usize;
            if ws.seen(n) {
                if ws.closed[ni] {
                    continue;
                }
            } else {
                if excluded(n) {
                    continue;
                }
                ws.stamp[ni] = ws.epoch;
                stats.touched += 1;
                stats.value_evals += 1;
                match value(n) {
                    Some(v) => {
                        ws.value[ni] = v;
                        ws.g[ni] = f64::INFINITY;
                        ws.closed[ni] = false;
                    }
                    None => {
                        ws.closed[ni] = true;
                        continue;
                    }
                }
            }
            let n_index = tree.index(n);
            let g = top.g + cost.edge_cost(&top.index, &n_index, ws.value[ni]);
            if g < ws.g[ni] {
                ws.g[ni] = g;
                ws.parent[ni] = top.id;
                let h = n_index.distance(&goal_index);
                ws.heap.push(Entry {
                    f: g + h,
                    h,
                    g,
                    index: n_index,
                    id: n,
                });
            }
        }
    }
    ws.buf = buf;
    let Some(total) = found else {
        return Ok(AstarResult {
            path: None,
            cost: f64::INFINITY,
            stats,
        });
    };
    let mut path = vec![goal];
    let mut at = goal;
    while at != start {
        at = ws.parent[at as usize];
        path.push(at);
    }
    path.reverse();
    Ok(AstarResult {
        path: Some(path),
        cost: total,
        stats,
    })
}

/// Ground truth for [`verify_fip`]: which cells are finest and their exact
/// occupancy.
pub trait FinestSource {
    fn dim(&self) -> usize;
    fn depth(&self) -> u32;
    fn is_finest(&self, idx: &NodeIndex) -> bool;
    fn exact_value(&self, idx: &NodeIndex) -> Option<f64>;
}

impl FinestSource for OccupancyTree {
    fn dim(&self) -> usize {
        OccupancyTree::dim(self)
    }
    fn depth(&self) -> u32 {
        OccupancyTree::depth(self)
    }
    fn is_finest(&self, idx: &NodeIndex) -> bool {
        self.is_leaf(idx)
    }
    fn exact_value(&self, idx: &NodeIndex) -> Option<f64> {
        self.value(idx).ok()
    }
}

/// Unit cells of a predicate world.
pub struct PredicateCells<'a> {
    pub predicate: &'a dyn ObstaclePredicate,
    pub dim: usize,
    pub depth: u32,
}

impl FinestSource for PredicateCells<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn depth(&self) -> u32 {
        self.depth
    }
    fn is_finest(&self, idx: &NodeIndex) -> bool {
        idx.k() == 0 && idx.dim() == self.dim && NodeIndex::root(self.dim, self.depth).contains_node(idx)
    }
    fn exact_value(&self, idx: &NodeIndex) -> Option<f64> {
        Some(exact_value(idx, self.predicate))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NotAdjacent { position: usize },
    NotFinest { position: usize },
    Obstacle { position: usize },
    StartNotContained,
    GoalNotContained,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty path"),
            Violation::NotAdjacent { position } => {
                write!(f, "nodes {} and {} are not neighbors", position, position + 1)
            }
            Violation::NotFinest { position } => write!(f, "node {position} is not a finest cell"),
            Violation::Obstacle { position } => write!(f, "node {position} is an obstacle"),
            Violation::StartNotContained => write!(f, "first node does not contain the start"),
            Violation::GoalNotContained => write!(f, "last node does not contain the goal"),
        }
    }
}

/// Checks adjacency, finest resolution, ε-feasibility and the endpoints,
/// in that order, and reports the first clause that fails.
pub fn verify_fip(
    source: &dyn FinestSource,
    path: &[NodeIndex],
    eps: f64,
    start: &[f64],
    goal: &[f64],
) -> std::result::Result<(), Violation> {
    if path.is_empty() {
        return Err(Violation::Empty);
    }
    if let Some(position) = path.windows(2).position(|w| !are_neighbors(&w[0], &w[1])) {
        return Err(Violation::NotAdjacent { position });
    }
    if let Some(position) = path.iter().position(|n| !source.is_finest(n)) {
        return Err(Violation::NotFinest { position });
    }
    let obstacle = |n: &NodeIndex| match source.exact_value(n) {
        Some(v) => is_eps_obstacle_value(v, n.dim(), n.k(), eps),
        None => true,
    };
    if let Some(position) = path.iter().position(obstacle) {
        return Err(Violation::Obstacle { position });
    }
    if !path[0].contains_point(start) {
        return Err(Violation::StartNotContained);
    }
    if !path[path.len() - 1].contains_point(goal) {
        return Err(Violation::GoalNotContained);
    }
    Ok(())
}
