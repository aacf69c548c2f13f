//! One benchmark instance per (algorithm, seed): a generated map, opposite
//! corners as start and goal, and wall-clock timings per phase.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::env::{generate_map, grid_predicate, rasterize, uniform_astar, GeneratorKind, GeneratorSpec};
use crate::error::{Error, Result};
use crate::grid::GridWorld;
use crate::planner::{mspp_plan, NeighborStrategy, Outcome, PlannerConfig, World};
use crate::sampling::{SampleScheme, SamplingParams};
use crate::search::{verify_fip, CostModel, PredicateCells};
use crate::tree::OccupancyTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "astar")]
    Astar,
    #[serde(rename = "mspp-naive")]
    MsppNaive,
    #[serde(rename = "mspp-fn")]
    MsppFn,
    #[serde(rename = "mspp-s")]
    MsppS,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Astar,
        Algorithm::MsppNaive,
        Algorithm::MsppFn,
        Algorithm::MsppS,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Astar => "astar",
            Algorithm::MsppNaive => "mspp-naive",
            Algorithm::MsppFn => "mspp-fn",
            Algorithm::MsppS => "mspp-s",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm `{s}`")))
    }
}

/// Everything but the algorithm and the seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub dim: usize,
    pub depth: u32,
    pub density: f64,
    pub generator: GeneratorKind,
    pub eps: f64,
    pub alpha: f64,
    pub weight: f64,
    pub gamma: f64,
    pub samples: u64,
    /// Iteration cap; `None` uses the planner default.
    pub budget: Option<u64>,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            dim: 2,
            depth: 5,
            density: 0.3,
            generator: GeneratorKind::Scatter,
            eps: 0.5,
            alpha: 1.0,
            weight: 1.0,
            gamma: 0.05,
            samples: 256,
            budget: None,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub generator: String,
    pub dim: usize,
    pub depth: u32,
    pub seed: u64,
    pub density: f64,
    pub map_build_ms: f64,
    pub update_ms: f64,
    pub search_ms: f64,
    pub plan_ms: f64,
    pub total_ms: f64,
    pub iterations: u64,
    pub backtracks: u64,
    pub astar_pops: u64,
    pub neighbor_calls: u64,
    pub value_evals: u64,
    pub touched: u64,
    pub sampled_nodes: u64,
    pub predicate_calls: u64,
    pub lazy_ok: bool,
    pub success: bool,
    pub outcome: String,
    pub path_cost: Option<f64>,
    pub path_nodes: usize,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Generator spec for an instance: opposite corners kept free.
pub fn instance_spec(params: &BenchParams, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        dim: params.dim,
        depth: params.depth,
        density: params.density,
        kind: params.generator,
        seed,
        free_corners: true,
    }
}

/// Start and goal: centers of the two opposite corner cells.
pub fn corner_points(world: &GridWorld) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = world.opposite_corners();
    (world.cell_center(&a), world.cell_center(&b))
}

/// Runs `algorithm` on the map generated from `seed`.
pub fn run_instance(algorithm: Algorithm, params: &BenchParams, seed: u64) -> Result<BenchRow> {
    let world = generate_map(&instance_spec(params, seed))?;
    run_on_world(algorithm, params, &world, seed)
}

/// Runs `algorithm` on a given world. The world is only reached through its
/// point predicate; map-based algorithms rasterize it first and count that
/// as map construction.
pub fn run_on_world(algorithm: Algorithm, params: &BenchParams, world: &GridWorld, seed: u64) -> Result<BenchRow> {
    let (start, goal) = corner_points(world);
    let predicate = grid_predicate(world);
    let (dim, depth) = (world.dim(), world.depth());
    let mut row = BenchRow {
        algorithm,
        generator: params.generator.tag().to_string(),
        dim,
        depth,
        seed,
        density: world.density(),
        map_build_ms: 0.0,
        update_ms: 0.0,
        search_ms: 0.0,
        plan_ms: 0.0,
        total_ms: 0.0,
        iterations: 0,
        backtracks: 0,
        astar_pops: 0,
        neighbor_calls: 0,
        value_evals: 0,
        touched: 0,
        sampled_nodes: 0,
        predicate_calls: 0,
        lazy_ok: true,
        success: false,
        outcome: String::new(),
        path_cost: None,
        path_nodes: 0,
    };
    let planner = PlannerConfig {
        eps: params.eps,
        alpha: params.alpha,
        cost: CostModel::new(params.weight)?,
        budget: params.budget,
        neighbors: if algorithm == Algorithm::MsppNaive {
            NeighborStrategy::Pairwise
        } else {
            NeighborStrategy::Fast
        },
        check_incremental: false,
    };

    let plan = match algorithm {
        Algorithm::Astar => {
            let t = Instant::now();
            let grid = rasterize(&predicate, dim, depth)?;
            row.map_build_ms = ms(t.elapsed());
            let (a, b) = grid.opposite_corners();
            let t = Instant::now();
            let res = uniform_astar(&grid, &a, &b)?;
            let plan = t.elapsed();
            row.search_ms = ms(plan);
            row.astar_pops = res.expanded as u64;
            row.neighbor_calls = res.expanded as u64;
            row.success = res.reachable;
            row.outcome = if res.reachable { "success" } else { "no-path" }.into();
            row.path_cost = res.cost.map(|c| c as f64);
            row.path_nodes = res.path.map_or(0, |p| p.len());
            plan
        }
        Algorithm::MsppNaive | Algorithm::MsppFn | Algorithm::MsppS => {
            let tree;
            let world_ref = if algorithm == Algorithm::MsppS {
                World::Predicate {
                    predicate: &predicate,
                    dim,
                    depth,
                    sampling: SamplingParams {
                        eps: params.eps,
                        gamma: params.gamma,
                        samples: params.samples,
                        seed,
                        scheme: SampleScheme::UnitCells,
                    },
                }
            } else {
                let t = Instant::now();
                let grid = rasterize(&predicate, dim, depth)?;
                tree = OccupancyTree::build_from_grid(&grid);
                row.map_build_ms = ms(t.elapsed());
                World::Map(&tree)
            };
            let t = Instant::now();
            let res = mspp_plan(world_ref, &start, &goal, &planner)?;
            let plan = t.elapsed();
            if res.outcome == Outcome::Success {
                let ok = match world_ref {
                    World::Map(tree) => verify_fip(tree, &res.path, params.eps, &start, &goal),
                    World::Predicate { .. } => {
                        let cells = PredicateCells {
                            predicate: &predicate,
                            dim,
                            depth,
                        };
                        verify_fip(&cells, &res.path, params.eps, &start, &goal)
                    }
                };
                if let Err(v) = ok {
                    return Err(Error::Internal(format!("{algorithm} returned an invalid path: {v}")));
                }
            }
            let s = &res.stats;
            row.update_ms = ms(s.update_time);
            row.search_ms = ms(s.astar_time);
            row.iterations = s.iterations;
            row.backtracks = s.backtracks;
            row.astar_pops = s.astar.pops as u64;
            row.neighbor_calls = s.astar.neighbor_calls as u64;
            row.value_evals = s.astar.value_evals as u64;
            row.touched = s.astar.touched as u64;
            row.sampled_nodes = s.sampled_nodes as u64;
            row.predicate_calls = s.predicate_calls;
            row.lazy_ok = s.lazy_violations == 0;
            row.success = res.outcome.is_success();
            row.outcome = outcome_tag(res.outcome).into();
            row.path_cost = res.cost;
            row.path_nodes = res.path.len();
            plan
        }
    };
    row.plan_ms = ms(plan);
    row.total_ms = row.map_build_ms + row.plan_ms;
    Ok(row)
}

pub fn outcome_tag(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Success => "success",
        Outcome::NoPath => "no-path",
        Outcome::BudgetExceeded => "budget-exceeded",
        Outcome::StartBlocked => "start-blocked",
        Outcome::GoalBlocked => "goal-blocked",
    }
}

/// Median of a non-empty sample; the mean of the two middle values for an
/// even count.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}
