use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use mspp_core::benchmark::{instance_spec, outcome_tag, run_on_world};
use mspp_core::bounds::bound_series;
use mspp_core::env::{generate_map, grid_predicate, rasterize, uniform_astar};
use mspp_core::planner::{mspp_plan, NeighborStrategy, Outcome, World};
use mspp_core::sampling::{ObstaclePredicate, SampleScheme, SamplingParams};
use mspp_core::search::{verify_fip, PredicateCells};
use mspp_core::{Algorithm, GridWorld, NodeIndex, OccupancyTree, Shape, ShapeWorld};

use crate::config::{Mode, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    /// Bad arguments, unreadable input, I/O failure.
    Usage = 1,
    /// No path exists or an endpoint is blocked.
    Failure = 2,
    BudgetExceeded = 3,
}

impl From<Outcome> for ExitCode {
    fn from(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Success => ExitCode::Success,
            Outcome::BudgetExceeded => ExitCode::BudgetExceeded,
            Outcome::NoPath | Outcome::StartBlocked | Outcome::GoalBlocked => ExitCode::Failure,
        }
    }
}

/// Column order of `bench` output, identical to the field order of
/// [`mspp_core::BenchRow`].
pub const BENCH_HEADER: [&str; 24] = [
    "algorithm",
    "generator",
    "dim",
    "depth",
    "seed",
    "density",
    "map_build_ms",
    "update_ms",
    "search_ms",
    "plan_ms",
    "total_ms",
    "iterations",
    "backtracks",
    "astar_pops",
    "neighbor_calls",
    "value_evals",
    "touched",
    "sampled_nodes",
    "predicate_calls",
    "lazy_ok",
    "success",
    "outcome",
    "path_cost",
    "path_nodes",
];

#[derive(Clone, Debug)]
pub enum PlanInput {
    Map(PathBuf),
    Predicate(String),
}

enum Source {
    Grid(GridWorld),
    Shape(ShapeWorld),
}

fn check_point(name: &str, point: &[f64], dim: usize, side: f64) -> Result<()> {
    ensure!(
        point.len() == dim,
        "{name} has {} coordinates, the world has {dim}",
        point.len()
    );
    ensure!(
        point.iter().all(|x| (0.0..side).contains(x)),
        "{name} {point:?} lies outside [0, {side})^{dim}"
    );
    Ok(())
}

fn write_node(out: &mut dyn Write, k: u32, center: &[f64]) -> std::io::Result<()> {
    write!(out, "{k}")?;
    for x in center {
        write!(out, " {x}")?;
    }
    writeln!(out)
}

pub fn plan(
    cfg: &RunConfig,
    input: &PlanInput,
    start: Option<&[f64]>,
    goal: Option<&[f64]>,
    out: &mut dyn Write,
) -> Result<ExitCode> {
    let algorithm = match cfg.algorithms.as_slice() {
        [a] => *a,
        many => bail!("plan takes a single algorithm, got {}", many.len()),
    };
    let source = match input {
        PlanInput::Map(path) => {
            Source::Grid(GridWorld::load(path).with_context(|| format!("reading map {}", path.display()))?)
        }
        PlanInput::Predicate(text) => {
            let shape: Shape = text.parse()?;
            Source::Shape(ShapeWorld::new(shape, cfg.dim, cfg.depth)?)
        }
    };
    let grid_pred;
    let (predicate, dim, depth): (&dyn ObstaclePredicate, usize, u32) = match &source {
        Source::Grid(g) => {
            grid_pred = grid_predicate(g);
            (&grid_pred, g.dim(), g.depth())
        }
        Source::Shape(s) => (s, cfg.dim, cfg.depth),
    };
    let side = 2f64.powi(depth as i32);
    let start = start.map_or_else(|| vec![0.5; dim], <[f64]>::to_vec);
    let goal = goal.map_or_else(|| vec![side - 0.5; dim], <[f64]>::to_vec);
    check_point("start", &start, dim, side)?;
    check_point("goal", &goal, dim, side)?;

    let sampling = algorithm == Algorithm::MsppS || cfg.mode == Mode::Sampling;
    // Analytic worlds are rasterized only for the map-based planners.
    let rasterized;
    let grid: Option<&GridWorld> = match &source {
        Source::Grid(g) => Some(g),
        Source::Shape(_) if sampling && algorithm != Algorithm::Astar => None,
        Source::Shape(s) => {
            rasterized = rasterize(s, dim, depth)?;
            Some(&rasterized)
        }
    };

    let clock = Instant::now();
    if algorithm == Algorithm::Astar {
        let grid = grid.expect("grid available for astar");
        let a = grid.cell_of_point(&start)?;
        let b = grid.cell_of_point(&goal)?;
        let blocked = if grid.get(&a) {
            Some(Outcome::StartBlocked)
        } else if grid.get(&b) {
            Some(Outcome::GoalBlocked)
        } else {
            None
        };
        if let Some(outcome) = blocked {
            writeln!(out, "# outcome={} algorithm=astar", outcome_tag(outcome))?;
            return Ok(outcome.into());
        }
        let res = uniform_astar(grid, &a, &b)?;
        let path = res.path.unwrap_or_default();
        for &cell in &path {
            write_node(out, 0, &grid.cell_center(&grid.coords(cell)))?;
        }
        let outcome = if res.reachable {
            Outcome::Success
        } else {
            Outcome::NoPath
        };
        write!(
            out,
            "# outcome={} algorithm=astar nodes={}",
            outcome_tag(outcome),
            path.len()
        )?;
        if let Some(c) = res.cost {
            write!(out, " cost={c}")?;
        }
        writeln!(
            out,
            " expanded={} plan_ms={:.3}",
            res.expanded,
            clock.elapsed().as_secs_f64() * 1e3
        )?;
        return Ok(outcome.into());
    }

    let tree;
    let world = if sampling {
        World::Predicate {
            predicate,
            dim,
            depth,
            sampling: SamplingParams {
                eps: cfg.eps,
                gamma: cfg.gamma,
                samples: cfg.samples,
                seed: cfg.seed,
                scheme: SampleScheme::UnitCells,
            },
        }
    } else {
        tree = OccupancyTree::build_from_grid(grid.expect("grid available in exact mode"));
        World::Map(&tree)
    };
    let mut planner = cfg.planner()?;
    if algorithm == Algorithm::MsppNaive {
        planner.neighbors = NeighborStrategy::Pairwise;
    }
    let res = mspp_plan(world, &start, &goal, &planner)?;
    if res.outcome.is_success() {
        let check = match world {
            World::Map(t) => verify_fip(t, &res.path, cfg.eps, &start, &goal),
            World::Predicate { .. } => {
                let cells = PredicateCells { predicate, dim, depth };
                verify_fip(&cells, &res.path, cfg.eps, &start, &goal)
            }
        };
        if let Err(v) = check {
            bail!("planner returned an invalid path ({v}); nothing printed");
        }
        for node in &res.path {
            write_node(out, node.k(), &node.center())?;
        }
    }
    let s = &res.stats;
    write!(
        out,
        "# outcome={} algorithm={algorithm} mode={} nodes={}",
        outcome_tag(res.outcome),
        if sampling { "sampling" } else { "exact" },
        res.path.len()
    )?;
    if let Some(c) = res.cost {
        write!(out, " cost={c}")?;
    }
    writeln!(
        out,
        " iterations={} backtracks={} astar_pops={} sampled_nodes={} plan_ms={:.3}",
        s.iterations,
        s.backtracks,
        s.astar.pops,
        s.sampled_nodes,
        clock.elapsed().as_secs_f64() * 1e3
    )?;
    Ok(res.outcome.into())
}

/// One row per (dimension, seed, algorithm). Every algorithm of a seed runs
/// on the same generated map before the next seed starts.
pub fn bench(cfg: &RunConfig, out: &mut dyn Write) -> Result<ExitCode> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    csv.write_record(BENCH_HEADER)?;
    for dim in cfg.bench_dims() {
        let params = cfg.bench_params(dim);
        for seed in cfg.seed..cfg.seed + cfg.seeds {
            let world = generate_map(&instance_spec(&params, seed))?;
            for &algorithm in &cfg.algorithms {
                let row = run_on_world(algorithm, &params, &world, seed)
                    .with_context(|| format!("{algorithm} on d={dim} seed={seed}"))?;
                csv.serialize(&row)?;
            }
        }
    }
    csv.flush()?;
    Ok(ExitCode::Success)
}

pub fn bound(cfg: &RunConfig, out: &mut dyn Write) -> Result<ExitCode> {
    let base = cfg.bound_params();
    base.validate()?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["n", "bound"])?;
    for (n, b) in bound_series(&base, cfg.n_min, cfg.n_max) {
        csv.write_record([n.to_string(), b.to_string()])?;
    }
    csv.flush()?;
    Ok(ExitCode::Success)
}

pub fn gen_map(cfg: &RunConfig, out: &mut dyn Write) -> Result<ExitCode> {
    let world = generate_map(&cfg.generator_spec())?;
    world.write_to(out)?;
    Ok(ExitCode::Success)
}

pub fn inspect_map(path: &Path, out: &mut dyn Write) -> Result<ExitCode> {
    let world = GridWorld::load(path).with_context(|| format!("reading map {}", path.display()))?;
    let tree = OccupancyTree::build_from_grid(&world);
    let (a, b) = world.opposite_corners();
    let connected = !world.get(&a) && !world.get(&b) && uniform_astar(&world, &a, &b)?.reachable;
    writeln!(out, "dim={} depth={} cells={}", world.dim(), world.depth(), world.len())?;
    writeln!(out, "obstacles={} density={}", world.obstacle_count(), world.density())?;
    writeln!(
        out,
        "tree_nodes={} tree_leaves={} root_value={}",
        tree.node_count(),
        tree.leaves().len(),
        tree.value(&NodeIndex::root(world.dim(), world.depth()))?
    )?;
    writeln!(out, "corners_connected={connected}")?;
    Ok(ExitCode::Success)
}
