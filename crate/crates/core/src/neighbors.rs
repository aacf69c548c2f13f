//! Face adjacency between dyadic cells.
//!
//! Two cells are neighbors when their hypercubes share a `(d-1)`-dimensional
//! face. Besides the exact pairwise test this module implements the
//! candidate-point search over a [`ReducedTree`]: from a cell, step one cell
//! side along each signed axis, descend the tree to the node holding that
//! point, and either take it (same size or larger neighbor) or collect its
//! leaf descendants on the facing side (smaller neighbors).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::index::{NodeIndex, MAX_DIM};
use crate::reduced::{ReducedTree, VertexId};

/// One of the `2d` signed axis directions `±d_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub axis: usize,
    pub positive: bool,
}

impl Direction {
    /// Canonical order: `+d_1 .. +d_d`, then `-d_1 .. -d_d`.
    pub fn all(dim: usize) -> impl Iterator<Item = Direction> {
        (0..2 * dim).map(move |i| Direction {
            axis: i % dim,
            positive: i < dim,
        })
    }

    pub fn reversed(self) -> Direction {
        Direction {
            axis: self.axis,
            positive: !self.positive,
        }
    }

    #[inline]
    pub fn sign(self) -> i64 {
        if self.positive {
            1
        } else {
            -1
        }
    }
}

/// Exact neighbor test on doubled coordinates:
/// `|p_a - p_b|_inf = 2^{k_a-1} + 2^{k_b-1}`, attained on exactly one axis.
#[inline]
pub fn are_neighbors(a: &NodeIndex, b: &NodeIndex) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    // Doubled coordinates stay below 2^29, so differences fit in i32.
    let bound = (1i32 << a.k()) + (1i32 << b.k());
    let mut attained = 0;
    for (&x, &y) in a.p2().iter().zip(b.p2()) {
        let delta = (x - y).abs();
        if delta > bound {
            return false;
        }
        if delta == bound {
            attained += 1;
        }
    }
    attained == 1
}

/// A neighbor candidate point `p + 2^k b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub direction: Direction,
    p2: [i64; MAX_DIM],
    dim: usize,
    pub in_bounds: bool,
}

impl Candidate {
    /// Doubled coordinates of the candidate point.
    pub fn point2(&self) -> &[i64] {
        &self.p2[..self.dim]
    }

    pub fn point(&self) -> Vec<f64> {
        self.point2().iter().map(|&c| c as f64 / 2.0).collect()
    }
}

/// The `2d` candidate positions in canonical direction order. Candidates
/// outside a world of side `2^depth` are kept and flagged.
pub fn neighbor_candidates(idx: &NodeIndex, depth: u32) -> Vec<Candidate> {
    let dim = idx.dim();
    let step = 1i64 << (idx.k() + 1);
    let upper = 1i64 << (depth + 1);
    Direction::all(dim)
        .map(|direction| {
            let mut p2 = [0i64; MAX_DIM];
            for (dst, &c) in p2.iter_mut().zip(idx.p2()) {
                *dst = c as i64;
            }
            p2[direction.axis] += direction.sign() * step;
            let in_bounds = p2[..dim].iter().all(|&c| c > 0 && c < upper);
            Candidate {
                direction,
                p2,
                dim,
                in_bounds,
            }
        })
        .collect()
}

/// Counts tree-descent steps, for complexity checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchCounter {
    pub descents: u64,
    pub steps: u64,
}

/// Descends from the root towards a doubled point, stopping at a node
/// centered on the point or at a leaf. Returns `None` when the point falls
/// in a removed region.
pub fn find_containing_node(tree: &ReducedTree, point2: &[i64]) -> Result<Option<VertexId>> {
    find_containing_node_counted(tree, point2, &mut SearchCounter::default())
}

pub fn find_containing_node_counted(
    tree: &ReducedTree,
    point2: &[i64],
    counter: &mut SearchCounter,
) -> Result<Option<VertexId>> {
    let root = tree.root_index();
    if point2.len() != tree.dim() || !root.contains_point2(point2) {
        return Err(Error::OutOfBounds(point2.iter().map(|&c| c as f64 / 2.0).collect()));
    }
    counter.descents += 1;
    let Some(root) = tree.root() else {
        return Ok(None);
    };
    Ok(descend(tree, root, point2, counter))
}

/// Descent below `id`, which must contain `point2`.
fn descend(tree: &ReducedTree, mut id: VertexId, point2: &[i64], counter: &mut SearchCounter) -> Option<VertexId> {
    loop {
        let cur = tree.index(id);
        if tree.is_leaf(id) || cur.p2().iter().zip(point2).all(|(&c, &x)| c as i64 == x) {
            return Some(id);
        }
        counter.steps += 1;
        id = tree.child(id, cur.child_slot_for(point2))?;
    }
}

/// Same result as [`find_containing_node_counted`] for an in-world point,
/// starting from the lowest ancestor of `from` that contains the point
/// instead of the root.
fn find_from(tree: &ReducedTree, from: VertexId, point2: &[i64], counter: &mut SearchCounter) -> Option<VertexId> {
    counter.descents += 1;
    let mut id = from;
    while !tree.index(id).contains_point2(point2) {
        id = tree.parent(id)?;
    }
    descend(tree, id, point2, counter)
}

/// Appends every leaf descendant of `node` lying against its face in
/// direction `dir`.
pub fn add_leaf_in_dir(tree: &ReducedTree, node: VertexId, dir: Direction, acc: &mut Vec<VertexId>) {
    let want = usize::from(dir.positive);
    for slot in 0..1usize << tree.dim() {
        if (slot >> dir.axis) & 1 != want {
            continue;
        }
        if let Some(child) = tree.child(node, slot) {
            if tree.is_leaf(child) {
                acc.push(child);
            } else {
                add_leaf_in_dir(tree, child, dir, acc);
            }
        }
    }
}

/// All leaves of `tree` adjacent to the leaf `id`.
pub fn find_neighbors(tree: &ReducedTree, id: VertexId) -> Result<Vec<VertexId>> {
    find_neighbors_counted(tree, id, &mut SearchCounter::default())
}

pub fn find_neighbors_counted(tree: &ReducedTree, id: VertexId, counter: &mut SearchCounter) -> Result<Vec<VertexId>> {
    let mut out = Vec::new();
    find_neighbors_into(tree, id, &mut out, counter)?;
    Ok(out)
}

/// [`find_neighbors`] appending into a caller-owned buffer.
pub fn find_neighbors_into(
    tree: &ReducedTree,
    id: VertexId,
    out: &mut Vec<VertexId>,
    counter: &mut SearchCounter,
) -> Result<()> {
    let idx = tree.index(id);
    if !tree.is_vertex(id) {
        return Err(Error::NotAVertex(tree.index(id)));
    }
    let dim = idx.dim();
    let step = 1i64 << (idx.k() + 1);
    let upper = 1i64 << (tree.depth() + 1);
    let mut p2 = [0i64; MAX_DIM];
    for (dst, &c) in p2.iter_mut().zip(idx.p2()) {
        *dst = c as i64;
    }
    for direction in Direction::all(dim) {
        let axis = direction.axis;
        let moved = p2[axis] + direction.sign() * step;
        if moved <= 0 || moved >= upper {
            continue;
        }
        let original = p2[axis];
        p2[axis] = moved;
        let found = find_from(tree, id, &p2[..dim], counter);
        p2[axis] = original;
        let Some(found) = found else {
            continue;
        };
        if tree.is_leaf(found) {
            out.push(found);
        } else {
            add_leaf_in_dir(tree, found, direction.reversed(), out);
        }
    }
    Ok(())
}

/// Unordered set of vertex pairs, each stored as `(smaller, larger)` in
/// canonical index order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeList {
    edges: BTreeSet<(NodeIndex, NodeIndex)>,
}

impl EdgeList {
    pub fn insert(&mut self, a: NodeIndex, b: NodeIndex) -> bool {
        if a == b {
            return false;
        }
        let pair = if a < b { (a, b) } else { (b, a) };
        self.edges.insert(pair)
    }

    pub fn contains(&self, a: &NodeIndex, b: &NodeIndex) -> bool {
        let pair = if a < b { (*a, *b) } else { (*b, *a) };
        self.edges.contains(&pair)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(NodeIndex, NodeIndex)> {
        self.edges.iter()
    }
}

/// Every neighboring pair of leaves.
///
/// Leaves are processed from the smallest scale to the largest and each one
/// only looks for neighbors of its own size or larger; smaller neighbors
/// were already paired when they were processed.
pub fn all_neighbor_pairs(tree: &ReducedTree) -> EdgeList {
    all_neighbor_pairs_counted(tree, &mut SearchCounter::default())
}

pub fn all_neighbor_pairs_counted(tree: &ReducedTree, counter: &mut SearchCounter) -> EdgeList {
    let mut leaves: Vec<(NodeIndex, VertexId)> = tree.vertex_ids().into_iter().map(|id| (tree.index(id), id)).collect();
    leaves.sort();
    let mut edges = EdgeList::default();
    for (idx, _) in &leaves {
        for cand in neighbor_candidates(idx, tree.depth()) {
            if !cand.in_bounds {
                continue;
            }
            let found = find_containing_node_counted(tree, cand.point2(), counter).expect("in-bounds candidate");
            if let Some(found) = found {
                if tree.is_leaf(found) {
                    edges.insert(*idx, tree.index(found));
                }
            }
        }
    }
    edges
}

/// Quadratic reference: tests every pair of leaves with [`are_neighbors`].
pub fn brute_force_pairs(tree: &ReducedTree) -> EdgeList {
    let leaves = tree.vertices();
    let mut edges = EdgeList::default();
    for (i, a) in leaves.iter().enumerate() {
        for b in &leaves[i + 1..] {
            if are_neighbors(a, b) {
                edges.insert(*a, *b);
            }
        }
    }
    edges
}

/// Flat copy of the leaves for pairwise neighbor queries: one
/// [`are_neighbors`] test per leaf, on contiguous coordinates.
#[derive(Clone, Debug, Default)]
pub struct PairwiseScanner {
    dim: usize,
    ids: Vec<VertexId>,
    half: Vec<i32>,
    coords: Vec<i32>,
}

impl PairwiseScanner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the contents with the current leaves of `tree`.
    pub fn load(&mut self, tree: &ReducedTree) {
        self.dim = tree.dim();
        self.ids.clear();
        self.half.clear();
        self.coords.clear();
        for id in tree.vertex_ids() {
            let idx = tree.index(id);
            self.ids.push(id);
            self.half.push(1 << idx.k());
            self.coords.extend_from_slice(idx.p2());
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Appends every loaded leaf that neighbors `idx`.
    pub fn neighbors_of(&self, idx: &NodeIndex, out: &mut Vec<VertexId>) {
        let d = self.dim;
        let own = 1u32 << idx.k();
        let p = idx.p2();
        let rows = self.coords.chunks_exact(d).zip(&self.half).zip(&self.ids);
        for ((c, &half), &id) in rows {
            let bound = own.wrapping_add(half as u32);
            let mut attained = 0u32;
            let mut ok = true;
            for (&x, &y) in p.iter().zip(c) {
                let delta = x.abs_diff(y);
                if delta > bound {
                    ok = false;
                    break;
                }
                attained = attained.wrapping_add((delta == bound) as u32);
            }
            if ok && attained == 1 {
                out.push(id);
            }
        }
    }
}
