//! End-to-end planning checked against the uniform-grid baseline.

use mspp_core::env::{generate_map, grid_predicate, uniform_astar, GeneratorKind, GeneratorSpec};
use mspp_core::planner::{mspp_plan, NeighborStrategy, Outcome, PlannerConfig, World};
use mspp_core::sampling::{SampleScheme, SamplingParams};
use mspp_core::search::{verify_fip, CostModel, PredicateCells};
use mspp_core::{GridWorld, OccupancyTree};

fn corners(world: &GridWorld) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = world.opposite_corners();
    (world.cell_center(&a), world.cell_center(&b))
}

fn exact_config(weight: f64) -> PlannerConfig {
    PlannerConfig {
        eps: 0.5,
        cost: CostModel::new(weight).unwrap(),
        ..PlannerConfig::default()
    }
}

#[test]
fn reachability_agrees_with_grid_astar() {
    let mut solvable = 0;
    for dim in [2, 3] {
        for (i, rho) in [0.2, 0.3, 0.4, 0.5].into_iter().enumerate() {
            for seed in 0..12u64 {
                let kind = if seed % 3 == 0 {
                    GeneratorKind::Blobs {
                        min_side: 1,
                        max_side: 3,
                    }
                } else {
                    GeneratorKind::Scatter
                };
                let spec = GeneratorSpec {
                    kind,
                    ..GeneratorSpec::new(dim, 4, rho, 100 * i as u64 + seed)
                };
                let world = generate_map(&spec).unwrap();
                let tree = OccupancyTree::build_from_grid(&world);
                let (s, g) = corners(&world);
                let (a, b) = world.opposite_corners();
                let baseline = uniform_astar(&world, &a, &b).unwrap();
                let plan = mspp_plan(World::Map(&tree), &s, &g, &exact_config(1.0)).unwrap();
                assert_eq!(
                    plan.outcome.is_success(),
                    baseline.reachable,
                    "d={dim} rho={rho} seed={seed}"
                );
                assert_ne!(plan.outcome, Outcome::BudgetExceeded);
                if plan.outcome.is_success() {
                    solvable += 1;
                    assert_eq!(verify_fip(&tree, &plan.path, 0.5, &s, &g), Ok(()));
                    assert_eq!(plan.stats.lazy_violations, 0);
                }
            }
        }
    }
    assert!(solvable > 20);
}

#[test]
fn empty_map_matches_grid_shortest_path() {
    let world = GridWorld::empty(2, 3).unwrap();
    let tree = OccupancyTree::build_full(&world);
    let (s, g) = corners(&world);
    let plan = mspp_plan(World::Map(&tree), &s, &g, &exact_config(0.0)).unwrap();
    let (a, b) = world.opposite_corners();
    let baseline = uniform_astar(&world, &a, &b).unwrap();
    assert_eq!(plan.outcome, Outcome::Success);
    assert_eq!(plan.path.len(), 2 * 7 + 1);
    assert_eq!(plan.path.len(), baseline.path.unwrap().len());
    assert_eq!(plan.cost, Some(baseline.cost.unwrap() as f64));
}

#[test]
fn full_wall_is_reported_unreachable() {
    for dim in [2, 3] {
        let mut world = GridWorld::empty(dim, 4).unwrap();
        for i in 0..world.len() {
            if world.coords(i)[0] == 9 {
                world.cells_mut()[i] = true;
            }
        }
        let tree = OccupancyTree::build_from_grid(&world);
        let (s, g) = corners(&world);
        let (a, b) = world.opposite_corners();
        assert!(!uniform_astar(&world, &a, &b).unwrap().reachable);
        let plan = mspp_plan(World::Map(&tree), &s, &g, &exact_config(1.0)).unwrap();
        assert_eq!(plan.outcome, Outcome::NoPath);
        assert!(plan.path.is_empty());
    }
}

#[test]
fn incremental_tree_equals_fresh_tree() {
    for seed in 0..10 {
        let world = generate_map(&GeneratorSpec::new(2, 5, 0.25, seed)).unwrap();
        let tree = OccupancyTree::build_from_grid(&world);
        let (s, g) = corners(&world);
        let cfg = PlannerConfig {
            check_incremental: true,
            alpha: [0.5, 1.0, 2.0][seed as usize % 3],
            ..exact_config(1.0)
        };
        let plan = mspp_plan(World::Map(&tree), &s, &g, &cfg).unwrap();
        assert!(plan.stats.iterations > 0);
        assert_eq!(plan.stats.incremental_mismatches, 0, "seed {seed}");
    }
}

#[test]
fn pairwise_and_fast_neighbors_plan_identically() {
    for seed in 0..8 {
        let world = generate_map(&GeneratorSpec::new(3, 4, 0.3, seed)).unwrap();
        let tree = OccupancyTree::build_from_grid(&world);
        let (s, g) = corners(&world);
        let fast = mspp_plan(World::Map(&tree), &s, &g, &exact_config(1.0)).unwrap();
        let cfg = PlannerConfig {
            neighbors: NeighborStrategy::Pairwise,
            ..exact_config(1.0)
        };
        let pairwise = mspp_plan(World::Map(&tree), &s, &g, &cfg).unwrap();
        assert_eq!(fast.outcome, pairwise.outcome);
        assert_eq!(fast.path, pairwise.path);
        assert_eq!(fast.stats.astar.pops, pairwise.stats.astar.pops);
    }
}

#[test]
fn sampling_mode_paths_are_feasible() {
    let mut successes = 0;
    for seed in 0..20 {
        let world = generate_map(&GeneratorSpec::new(2, 5, 0.2, seed)).unwrap();
        let predicate = grid_predicate(&world);
        let (s, g) = corners(&world);
        let sampling = SamplingParams {
            eps: 0.5,
            gamma: 0.05,
            samples: 64,
            seed,
            scheme: SampleScheme::UnitCells,
        };
        let plan = mspp_plan(
            World::Predicate {
                predicate: &predicate,
                dim: 2,
                depth: 5,
                sampling,
            },
            &s,
            &g,
            &exact_config(1.0),
        )
        .unwrap();
        assert_eq!(plan.stats.lazy_violations, 0);
        if plan.outcome.is_success() {
            successes += 1;
            let cells = PredicateCells {
                predicate: &predicate,
                dim: 2,
                depth: 5,
            };
            assert_eq!(verify_fip(&cells, &plan.path, 0.5, &s, &g), Ok(()));
            let tree = OccupancyTree::build_full(&world);
            assert_eq!(verify_fip(&tree, &plan.path, 0.5, &s, &g), Ok(()));
        }
    }
    assert!(successes >= 15);
}
