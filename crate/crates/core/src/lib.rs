//! Multiscale path planning on `2^d` dyadic occupancy trees.
//!
//! The crate covers the full planning stack: the occupancy tree built from a
//! unit grid ([`tree`]), exact face adjacency and the fast candidate-point
//! neighbor search ([`neighbors`]), the incrementally maintained reduced tree
//! whose leaves form the planning graph ([`reduced`]), lazy A* and the
//! backtracking planner ([`search`], [`planner`]), Monte Carlo occupancy
//! estimation with its failure bounds ([`sampling`], [`bounds`]), and the
//! random worlds and uniform-grid baseline used for benchmarking
//! ([`env`], [`predicates`], [`benchmark`]).

pub mod benchmark;
pub mod bounds;
pub mod env;
pub mod error;
pub mod grid;
pub mod index;
pub mod neighbors;
pub mod planner;
pub mod predicates;
pub mod reduced;
pub mod sampling;
pub mod search;
pub mod tree;

pub use benchmark::{Algorithm, BenchParams, BenchRow};
pub use bounds::{failure_bound, k_max, k_min, nb_occ, BoundParams};
pub use env::{generate_map, grid_predicate, uniform_astar, BaselineResult, GeneratorKind, GeneratorSpec};
pub use error::{Error, Result};
pub use grid::GridWorld;
pub use index::{Hypercube, NodeIndex, MAX_DIM};
pub use neighbors::{are_neighbors, Direction, EdgeList};
pub use planner::{mspp_plan, NeighborStrategy, Outcome, PlanResult, PlannerConfig, World};
pub use predicates::{Shape, ShapeWorld};
pub use reduced::{ReducedTree, VertexId, VisitedIndex, WindowParams};
pub use sampling::{hybrid_classify, ObstaclePredicate, SampleScheme, SamplingParams};
pub use search::{astar_lazy, verify_fip, CostModel, Violation};
pub use tree::OccupancyTree;
