//! The multiscale planning loop.
//!
//! Each iteration refines the reduced tree around the current cell, runs
//! lazy A* from the current vertex to the vertex holding the goal, and
//! commits only the first step. When A* fails the planner backtracks: the
//! current cell is blocked for the rest of the query and the walk resumes
//! from its predecessor. The query fails once the start cell itself would
//! be blocked.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::NodeIndex;
use crate::neighbors::{are_neighbors, find_neighbors_into, PairwiseScanner, SearchCounter};
use crate::reduced::{Backing, ReducedTree, UpdateContext, VisitedIndex, WindowParams};
use crate::sampling::{EstimateCache, ObstaclePredicate, SamplingParams};
use crate::search::{astar_lazy, AstarStats, AstarWorkspace, CostModel};
use crate::tree::{is_eps_obstacle_value, OccupancyTree};

/// Where occupancy comes from.
#[derive(Clone, Copy)]
pub enum World<'a> {
    /// Precomputed occupancy tree; values are exact.
    Map(&'a OccupancyTree),
    /// Obstacle predicate only; values are counted or sampled on demand.
    Predicate {
        predicate: &'a dyn ObstaclePredicate,
        dim: usize,
        depth: u32,
        sampling: SamplingParams,
    },
}

impl World<'_> {
    pub fn dim(&self) -> usize {
        match self {
            World::Map(t) => t.dim(),
            World::Predicate { dim, .. } => *dim,
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            World::Map(t) => t.depth(),
            World::Predicate { depth, .. } => *depth,
        }
    }
}

/// How A* obtains the neighbors of an expanded vertex.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborStrategy {
    /// Candidate points and tree descent.
    #[default]
    Fast,
    /// Test the expanded vertex against every other vertex.
    Pairwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub eps: f64,
    pub alpha: f64,
    pub cost: CostModel,
    /// Iteration cap; `None` means four times the number of unit cells.
    pub budget: Option<u64>,
    pub neighbors: NeighborStrategy,
    /// Rebuild the reduced tree from scratch every iteration and compare it
    /// with the incrementally updated one.
    pub check_incremental: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            eps: 0.5,
            alpha: 1.0,
            cost: CostModel::default(),
            budget: None,
            neighbors: NeighborStrategy::Fast,
            check_incremental: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        WindowParams::new(self.alpha)?;
        CostModel::new(self.cost.weight)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    /// Backtracking exhausted every alternative from the start cell.
    NoPath,
    BudgetExceeded,
    StartBlocked,
    GoalBlocked,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub iterations: u64,
    pub backtracks: u64,
    pub astar_runs: u64,
    pub astar: AstarStats,
    /// A* runs whose counters broke the laziness accounting.
    pub lazy_violations: u64,
    pub sampled_nodes: usize,
    pub predicate_calls: u64,
    /// Largest number of live reduced-tree nodes seen.
    pub max_tree_nodes: usize,
    pub tree_allocations: u64,
    /// Iterations at which the incremental tree differed from a fresh one.
    pub incremental_mismatches: u64,
    pub update_time: Duration,
    pub astar_time: Duration,
    pub total_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub outcome: Outcome,
    /// The committed walk; on success it is a finest information path.
    pub path: Vec<NodeIndex>,
    pub cost: Option<f64>,
    pub stats: PlanStats,
}

/// Default iteration cap for a world.
pub fn default_budget(dim: usize, depth: u32) -> u64 {
    4u64.saturating_mul(1u64 << (dim as u32 * depth).min(61))
}

enum Values<'a> {
    Map(&'a OccupancyTree),
    Sampled {
        predicate: &'a dyn ObstaclePredicate,
        cache: EstimateCache,
    },
}

impl Values<'_> {
    /// Occupancy used in edge costs, `None` for obstacles.
    fn passable_value(&mut self, idx: &NodeIndex, eps: f64) -> Option<f64> {
        match self {
            Values::Map(t) => {
                let v = t.value(idx).ok()?;
                (!is_eps_obstacle_value(v, idx.dim(), idx.k(), eps)).then_some(v)
            }
            Values::Sampled { predicate, cache } => {
                let c = cache.classify(idx, *predicate);
                (!c.obstacle).then_some(c.value)
            }
        }
    }

    fn finest_at(&self, point: &[f64], depth: u32) -> Result<NodeIndex> {
        match self {
            Values::Map(t) => t.leaf_at(point),
            Values::Sampled { .. } => {
                let center: Vec<f64> = point.iter().map(|x| x.floor() + 0.5).collect();
                NodeIndex::from_center(depth, 0, &center)
            }
        }
    }

    fn is_finest(&self, idx: &NodeIndex) -> bool {
        match self {
            Values::Map(t) => t.is_leaf(idx),
            Values::Sampled { .. } => idx.k() == 0,
        }
    }

    fn backing(&self) -> Backing<'_> {
        match self {
            Values::Map(t) => Backing::Map(t),
            Values::Sampled { .. } => Backing::Geometric,
        }
    }

    fn sampled_nodes(&self) -> usize {
        match self {
            Values::Map(_) => 0,
            Values::Sampled { cache, .. } => cache.sampled_nodes(),
        }
    }

    fn predicate_calls(&self) -> u64 {
        match self {
            Values::Map(_) => 0,
            Values::Sampled { cache, .. } => cache.predicate_calls(),
        }
    }
}

fn check_point(point: &[f64], dim: usize, depth: u32) -> Result<()> {
    if point.len() != dim {
        return Err(Error::Dimension(point.len()));
    }
    if !NodeIndex::root(dim, depth).contains_point(point) {
        return Err(Error::OutOfBounds(point.to_vec()));
    }
    Ok(())
}

/// Plans from `start` to `goal`.
pub fn mspp_plan(world: World<'_>, start: &[f64], goal: &[f64], config: &PlannerConfig) -> Result<PlanResult> {
    config.validate()?;
    let began = Instant::now();
    let (dim, depth) = (world.dim(), world.depth());
    check_point(start, dim, depth)?;
    check_point(goal, dim, depth)?;
    let mut values = match world {
        World::Map(t) => Values::Map(t),
        World::Predicate {
            predicate, sampling, ..
        } => Values::Sampled {
            predicate,
            cache: EstimateCache::new(sampling),
        },
    };
    let eps = config.eps;
    let window = WindowParams::new(config.alpha)?;
    let budget = config.budget.unwrap_or_else(|| default_budget(dim, depth));
    let mut stats = PlanStats::default();

    let start_cell = values.finest_at(start, depth)?;
    let goal_cell = values.finest_at(goal, depth)?;
    let result = |outcome, path: Vec<NodeIndex>, cost, mut stats: PlanStats, values: &Values<'_>| {
        stats.sampled_nodes = values.sampled_nodes();
        stats.predicate_calls = values.predicate_calls();
        stats.total_time = began.elapsed();
        Ok(PlanResult {
            outcome,
            path,
            cost,
            stats,
        })
    };
    if values.passable_value(&start_cell, eps).is_none() {
        return result(Outcome::StartBlocked, Vec::new(), None, stats, &values);
    }
    if values.passable_value(&goal_cell, eps).is_none() {
        return result(Outcome::GoalBlocked, Vec::new(), None, stats, &values);
    }

    let mut reduced = ReducedTree::new(dim, depth);
    let mut visited = VisitedIndex::new(depth);
    let mut ws = AstarWorkspace::new();
    let mut path = vec![start_cell];
    let mut path_values = vec![values.passable_value(&start_cell, eps).unwrap_or(0.0)];
    let mut scanner = PairwiseScanner::new();
    visited.push_path(start_cell);

    loop {
        let current = *path.last().expect("path holds the start");
        if current.contains_point(goal) {
            let cost = config.cost.path_cost(&path, &path_values);
            stats.tree_allocations = reduced.allocations();
            return result(Outcome::Success, path, Some(cost), stats, &values);
        }
        if stats.iterations >= budget {
            stats.tree_allocations = reduced.allocations();
            return result(Outcome::BudgetExceeded, path, None, stats, &values);
        }
        stats.iterations += 1;

        let t = Instant::now();
        let ctx = UpdateContext {
            backing: values.backing(),
            current,
            visited: &visited,
            eps,
            window,
        };
        reduced.update(&ctx);
        if config.check_incremental {
            let mut fresh = ReducedTree::new(dim, depth);
            fresh.update(&ctx);
            if fresh.snapshot() != reduced.snapshot() {
                stats.incremental_mismatches += 1;
            }
        }
        stats.update_time += t.elapsed();
        stats.max_tree_nodes = stats.max_tree_nodes.max(reduced.len());

        let v_start = reduced
            .find(&current)
            .filter(|&v| reduced.is_leaf(v))
            .ok_or_else(|| Error::Internal(format!("current cell {current:?} is not a vertex")))?;
        let step = match reduced.vertex_at(goal) {
            None => None,
            Some(v_goal) => {
                if config.neighbors == NeighborStrategy::Pairwise {
                    scanner.load(&reduced);
                }
                let sampled_before = values.sampled_nodes();
                let t = Instant::now();
                let tree = &reduced;
                let visited = &visited;
                let scanner = &scanner;
                let run = astar_lazy(
                    tree,
                    v_start,
                    v_goal,
                    &config.cost,
                    &mut ws,
                    |id| id != v_start && visited.on_path(&tree.index(id)),
                    |id, out| match config.neighbors {
                        NeighborStrategy::Fast => find_neighbors_into(tree, id, out, &mut SearchCounter::default()),
                        NeighborStrategy::Pairwise => {
                            scanner.neighbors_of(&tree.index(id), out);
                            Ok(())
                        }
                    },
                    |id| values.passable_value(&tree.index(id), eps),
                )?;
                stats.astar_time += t.elapsed();
                stats.astar_runs += 1;
                stats.astar.accumulate(&run.stats);
                let sampled = values.sampled_nodes() - sampled_before;
                if !run.stats.is_lazy() || sampled > run.stats.touched {
                    stats.lazy_violations += 1;
                }
                run.path.map(|p| p[1])
            }
        };

        match step {
            Some(next_id) => {
                let next = reduced.index(next_id);
                if !reduced.is_leaf(next_id) || !are_neighbors(&current, &next) || !values.is_finest(&next) {
                    return Err(Error::Internal(format!(
                        "first step {next:?} from {current:?} is not an adjacent finest cell"
                    )));
                }
                let v = values
                    .passable_value(&next, eps)
                    .ok_or_else(|| Error::Internal(format!("first step {next:?} is an obstacle")))?;
                path.push(next);
                path_values.push(v);
                visited.push_path(next);
            }
            None => {
                stats.backtracks += 1;
                if path.len() == 1 {
                    stats.tree_allocations = reduced.allocations();
                    return result(Outcome::NoPath, Vec::new(), None, stats, &values);
                }
                let dead = path.pop().expect("non-empty");
                path_values.pop();
                visited.pop_path(&dead);
                visited.block(dead);
            }
        }
    }
}
