//! Random worlds and the uniform-grid A* baseline.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridWorld;
use crate::sampling::ObstaclePredicate;

/// Obstacle placement strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GeneratorKind {
    /// Exactly `round(ρ N)` cells chosen uniformly without replacement.
    Scatter,
    /// Random axis-aligned boxes with sides in `min_side..=max_side`, placed
    /// until the obstacle count reaches `round(ρ N)`. The last box is cut
    /// short so the count is exact.
    Blobs { min_side: u32, max_side: u32 },
}

impl GeneratorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            GeneratorKind::Scatter => "scatter",
            GeneratorKind::Blobs { .. } => "blobs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dim: usize,
    pub depth: u32,
    pub density: f64,
    pub kind: GeneratorKind,
    pub seed: u64,
    /// Keep the all-zero and the all-max cells free.
    pub free_corners: bool,
}

impl GeneratorSpec {
    pub fn new(dim: usize, depth: u32, density: f64, seed: u64) -> Self {
        GeneratorSpec {
            dim,
            depth,
            density,
            kind: GeneratorKind::Scatter,
            seed,
            free_corners: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        GridWorld::cell_count_for(self.dim, self.depth)?;
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Parameter(format!(
                "density must lie in [0, 1], got {}",
                self.density
            )));
        }
        if let GeneratorKind::Blobs { min_side, max_side } = self.kind {
            if min_side == 0 || min_side > max_side {
                return Err(Error::Parameter(format!(
                    "blob sides must satisfy 1 <= min <= max, got {min_side}..{max_side}"
                )));
            }
        }
        let (n, target) = self.counts();
        let reserved = if self.free_corners { corner_count(n) } else { 0 };
        if target + reserved > n {
            return Err(Error::Parameter(format!(
                "density {} leaves no room for the free corners",
                self.density
            )));
        }
        Ok(())
    }

    fn counts(&self) -> (usize, usize) {
        let n = GridWorld::cell_count_for(self.dim, self.depth).unwrap_or(0);
        (n, (self.density * n as f64).round() as usize)
    }
}

fn corner_count(n: usize) -> usize {
    if n > 1 {
        2
    } else {
        1
    }
}

/// Deterministic map for `spec`.
pub fn generate_map(spec: &GeneratorSpec) -> Result<GridWorld> {
    spec.validate()?;
    let mut world = GridWorld::empty(spec.dim, spec.depth)?;
    let (n, target) = spec.counts();
    let last = n - 1;
    let reserved = |i: usize| spec.free_corners && (i == 0 || i == last);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::Scatter => {
            // Draw among the non-reserved cells, which occupy positions
            // 1..last (or all of them) in linear order.
            let offset = usize::from(spec.free_corners);
            let avail = n - if spec.free_corners { corner_count(n) } else { 0 };
            let cells = world.cells_mut();
            for i in sample(&mut rng, avail, target) {
                cells[i + offset] = true;
            }
        }
        GeneratorKind::Blobs { min_side, max_side } => {
            let side = world.side();
            let dim = spec.dim;
            let mut placed = 0;
            let mut low = vec![0usize; dim];
            let mut ext = vec![0usize; dim];
            let mut pos = vec![0usize; dim];
            while placed < target {
                for j in 0..dim {
                    ext[j] = (rng.gen_range(min_side..=max_side) as usize).min(side);
                    low[j] = rng.gen_range(0..=side - ext[j]);
                }
                let volume: usize = ext.iter().product();
                for mut r in 0..volume {
                    for j in 0..dim {
                        pos[j] = low[j] + r % ext[j];
                        r /= ext[j];
                    }
                    let i = world.linear(&pos);
                    if !world.get_linear(i) && !reserved(i) {
                        world.cells_mut()[i] = true;
                        placed += 1;
                        if placed == target {
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok(world)
}

/// Outcome of [`uniform_astar`].
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult {
    pub reachable: bool,
    /// Linear cell indices from start to goal.
    pub path: Option<Vec<usize>>,
    /// Number of unit steps.
    pub cost: Option<u64>,
    pub expanded: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    g: u32,
    cell: usize,
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.cmp(&self.cell))
            .then_with(|| other.g.cmp(&self.g))
    }
}

/// A* over free cells with `2d` face connectivity and unit steps.
///
/// The heuristic is the Euclidean distance between cell centers, the same
/// one the multiscale planner uses. Ties go to the smaller `h`, then to the
/// smaller linear index.
pub fn uniform_astar(world: &GridWorld, start: &[usize], goal: &[usize]) -> Result<BaselineResult> {
    let began = Instant::now();
    for c in [start, goal] {
        if c.len() != world.dim() {
            return Err(Error::Dimension(c.len()));
        }
        if !world.in_bounds(c) {
            return Err(Error::OutOfBounds(c.iter().map(|&x| x as f64).collect()));
        }
        if world.get(c) {
            return Err(Error::Parameter(format!("cell {c:?} is an obstacle")));
        }
    }
    let dim = world.dim();
    let side = world.side();
    let n = world.len();
    let mut strides = vec![1usize; dim];
    for j in 1..dim {
        strides[j] = strides[j - 1] * side;
    }
    let s = world.linear(start);
    let g_cell = world.linear(goal);
    let h = |cell: usize| -> f64 {
        let mut sum = 0.0;
        let mut rest = cell;
        for &gc in goal {
            let c = rest % side;
            rest /= side;
            let d = c as f64 - gc as f64;
            sum += d * d;
        }
        sum.sqrt()
    };
    const UNSEEN: u32 = u32::MAX;
    let mut g = vec![UNSEEN; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[s] = 0;
    let h0 = h(s);
    heap.push(Open {
        f: h0,
        h: h0,
        g: 0,
        cell: s,
    });
    let mut expanded = 0;
    let mut found = false;
    let cells = world.cells();
    while let Some(top) = heap.pop() {
        if closed[top.cell] || top.g > g[top.cell] {
            continue;
        }
        if top.cell == g_cell {
            found = true;
            break;
        }
        closed[top.cell] = true;
        expanded += 1;
        let mut rest = top.cell;
        for &stride in &strides {
            let c = rest % side;
            rest /= side;
            let mut visit = |next: usize| {
                if cells[next] || closed[next] {
                    return;
                }
                let ng = top.g + 1;
                if ng < g[next] {
                    g[next] = ng;
                    parent[next] = top.cell;
                    let hn = h(next);
                    heap.push(Open {
                        f: ng as f64 + hn,
                        h: hn,
                        g: ng,
                        cell: next,
                    });
                }
            };
            if c + 1 < side {
                visit(top.cell + stride);
            }
            if c > 0 {
                visit(top.cell - stride);
            }
        }
    }
    if !found {
        return Ok(BaselineResult {
            reachable: false,
            path: None,
            cost: None,
            expanded,
            elapsed: began.elapsed(),
        });
    }
    let mut path = vec![g_cell];
    let mut at = g_cell;
    while at != s {
        at = parent[at];
        path.push(at);
    }
    path.reverse();
    Ok(BaselineResult {
        reachable: true,
        cost: Some(g[g_cell] as u64),
        path: Some(path),
        expanded,
        elapsed: began.elapsed(),
    })
}

/// Point query backed by a grid: a point is an obstacle when the unit cell
/// holding it is.
#[derive(Clone, Copy, Debug)]
pub struct GridPredicate<'a> {
    world: &'a GridWorld,
}

impl<'a> GridPredicate<'a> {
    pub fn new(world: &'a GridWorld) -> Self {
        GridPredicate { world }
    }

    pub fn lookup(&self, point: &[f64]) -> Result<bool> {
        let c = self.world.cell_of_point(point)?;
        Ok(self.world.get(&c))
    }
}

impl ObstaclePredicate for GridPredicate<'_> {
    fn is_obstacle(&self, point: &[f64]) -> bool {
        self.world
            .linear_of_point(point)
            .is_none_or(|i| self.world.get_linear(i))
    }
}

pub fn grid_predicate(world: &GridWorld) -> GridPredicate<'_> {
    GridPredicate::new(world)
}

/// Evaluates `predicate` at every cell center.
pub fn rasterize(predicate: &dyn ObstaclePredicate, dim: usize, depth: u32) -> Result<GridWorld> {
    let mut world = GridWorld::empty(dim, depth)?;
    let side = world.side();
    let mut coords = vec![0usize; dim];
    let mut point = vec![0.5; dim];
    for i in 0..world.len() {
        world.cells_mut()[i] = predicate.is_obstacle(&point);
        for j in 0..dim {
            coords[j] += 1;
            if coords[j] < side {
                point[j] = coords[j] as f64 + 0.5;
                break;
            }
            coords[j] = 0;
            point[j] = 0.5;
        }
    }
    Ok(world)
}
