//! The per-iteration reduced tree `T_i`.
//!
//! `T_i` mirrors the traversed part of the full map (or, without a map, of
//! the bare dyadic partition). Its leaves are the vertices of the reduced
//! graph: fine cells around the current node, coarser cells further away.
//! The tree is updated in place from one iteration to the next so that only
//! nodes that did not exist before are allocated.

use std::collections::BTreeMap;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::index::NodeIndex;
use crate::tree::{is_eps_obstacle_value, OccupancyTree, TreeNodeId};

pub type VertexId = u32;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct RNode {
    index: NodeIndex,
    parent: u32,
    /// Child block number, or `NONE` for a leaf.
    block: u32,
    value: Option<f64>,
}

/// Scale multiplier of the window criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowParams {
    pub alpha: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { alpha: 1.0 }
    }
}

impl WindowParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(WindowParams { alpha })
    }

    /// `|p - p_i| - (sqrt(d)/2) 2^{k_i} >= alpha 2^k`, evaluated without
    /// square roots: with `A = alpha 2^k` and `B = 2^{k_i}/2` the test is
    /// `|p - p_i|^2 - A^2 - d B^2 >= 2 A B sqrt(d)`, and both sides are
    /// squared once more when the left one is non-negative.
    pub fn is_far(&self, node: &NodeIndex, current: &NodeIndex) -> bool {
        let dim = node.dim() as f64;
        let dist2 = node.dist2_doubled(current) as f64 / 4.0;
        let a = self.alpha * node.side();
        let b = current.side() / 2.0;
        let lhs = dist2 - a * a - dim * b * b;
        if lhs < 0.0 {
            return false;
        }
        lhs * lhs >= 4.0 * a * a * b * b * dim
    }
}

/// Brute-force path test: no path node has its center strictly inside the
/// hypercube of `idx`.
pub fn does_not_contain_path(idx: &NodeIndex, path: &[NodeIndex]) -> bool {
    !path.iter().any(|n| idx.strictly_contains_point2(n.p2()))
}

/// Nodes already committed to by the planner: the current candidate path and
/// the dead ends removed by backtracking.
///
/// A dyadic cell holds the center of a path node strictly inside iff it is
/// that node or one of its ancestors, so membership is answered from an
/// ancestor count map instead of a scan.
#[derive(Clone, Debug, Default)]
pub struct VisitedIndex {
    depth: u32,
    covering: FxHashMap<NodeIndex, u32>,
    path: FxHashSet<NodeIndex>,
    blocked: FxHashSet<NodeIndex>,
}

impl VisitedIndex {
    pub fn new(depth: u32) -> Self {
        VisitedIndex {
            depth,
            ..Default::default()
        }
    }

    pub fn from_path(depth: u32, path: &[NodeIndex]) -> Self {
        let mut v = Self::new(depth);
        for n in path {
            v.push_path(*n);
        }
        v
    }

    fn cover(&mut self, idx: NodeIndex) {
        let mut cur = Some(idx);
        while let Some(c) = cur {
            *self.covering.entry(c).or_insert(0) += 1;
            cur = c.parent(self.depth);
        }
    }

    fn uncover(&mut self, idx: NodeIndex) {
        let mut cur = Some(idx);
        while let Some(c) = cur {
            if let Some(n) = self.covering.get_mut(&c) {
                *n -= 1;
                if *n == 0 {
                    self.covering.remove(&c);
                }
            }
            cur = c.parent(self.depth);
        }
    }

    pub fn push_path(&mut self, idx: NodeIndex) {
        if self.path.insert(idx) {
            self.cover(idx);
        }
    }

    pub fn pop_path(&mut self, idx: &NodeIndex) {
        if self.path.remove(idx) {
            self.uncover(*idx);
        }
    }

    pub fn block(&mut self, idx: NodeIndex) {
        if self.blocked.insert(idx) {
            self.cover(idx);
        }
    }

    pub fn is_blocked(&self, idx: &NodeIndex) -> bool {
        self.blocked.contains(idx)
    }

    pub fn on_path(&self, idx: &NodeIndex) -> bool {
        self.path.contains(idx)
    }

    /// Whether the hypercube of `idx` holds a path or blocked node.
    pub fn covers_any(&self, idx: &NodeIndex) -> bool {
        self.covering.contains_key(idx)
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.len()
    }
}

/// What the reduced tree is refined against.
#[derive(Clone, Copy, Debug)]
pub enum Backing<'a> {
    /// A full occupancy map: leaves of the map are the finest cells and
    /// ε-obstacles are removed during the update.
    Map(&'a OccupancyTree),
    /// A bare geometric partition: unit cells are the finest cells and no
    /// values are known at update time.
    Geometric,
}

pub struct UpdateContext<'a> {
    pub backing: Backing<'a>,
    pub current: NodeIndex,
    pub visited: &'a VisitedIndex,
    pub eps: f64,
    pub window: WindowParams,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub visited: usize,
    pub allocated: usize,
    pub freed: usize,
    /// Indices at which the vertex rule fired and the node was kept.
    pub stopped: Vec<NodeIndex>,
}

#[derive(Clone, Debug)]
pub struct ReducedTree {
    dim: usize,
    depth: u32,
    fanout: usize,
    nodes: Vec<RNode>,
    free_nodes: Vec<u32>,
    slots: Vec<u32>,
    free_blocks: Vec<u32>,
    root: u32,
    live: usize,
    allocations: u64,
}

impl ReducedTree {
    /// A tree holding only the root, which is a leaf.
    pub fn new(dim: usize, depth: u32) -> Self {
        let mut t = ReducedTree {
            dim,
            depth,
            fanout: 1 << dim,
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            slots: Vec::new(),
            free_blocks: Vec::new(),
            root: NONE,
            live: 0,
            allocations: 0,
        };
        t.root = t.alloc_node(NodeIndex::root(dim, depth), NONE);
        t
    }

    pub fn for_map(tree: &OccupancyTree) -> Self {
        Self::new(tree.dim(), tree.depth())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root(&self) -> Option<VertexId> {
        (self.root != NONE).then_some(self.root)
    }

    pub fn root_index(&self) -> NodeIndex {
        NodeIndex::root(self.dim, self.depth)
    }

    /// Number of live nodes.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Upper bound (exclusive) on vertex ids handed out so far.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes allocated over the lifetime of the tree.
    pub fn allocations(&self) -> u64 {
        self.allocations
    }

    #[inline]
    pub fn index(&self, id: VertexId) -> NodeIndex {
        self.nodes[id as usize].index
    }

    #[inline]
    pub fn is_leaf(&self, id: VertexId) -> bool {
        self.nodes[id as usize].block == NONE
    }

    #[inline]
    pub fn value(&self, id: VertexId) -> Option<f64> {
        self.nodes[id as usize].value
    }

    pub fn set_value(&mut self, id: VertexId, value: Option<f64>) {
        self.nodes[id as usize].value = value;
    }

    pub fn parent(&self, id: VertexId) -> Option<VertexId> {
        let p = self.nodes[id as usize].parent;
        (p != NONE).then_some(p)
    }

    /// Child in `slot`, if the node is internal and that child was not
    /// removed.
    #[inline]
    pub fn child(&self, id: VertexId, slot: usize) -> Option<VertexId> {
        let block = self.nodes[id as usize].block;
        if block == NONE {
            return None;
        }
        let c = self.slots[block as usize * self.fanout + slot];
        (c != NONE).then_some(c)
    }

    pub fn children(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.fanout).filter_map(move |s| self.child(id, s))
    }

    fn alloc_node(&mut self, index: NodeIndex, parent: u32) -> u32 {
        self.live += 1;
        self.allocations += 1;
        let node = RNode {
            index,
            parent,
            block: NONE,
            value: None,
        };
        if let Some(id) = self.free_nodes.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as u32
        }
    }

    fn alloc_block(&mut self) -> u32 {
        if let Some(b) = self.free_blocks.pop() {
            let start = b as usize * self.fanout;
            self.slots[start..start + self.fanout].fill(NONE);
            b
        } else {
            let b = self.slots.len() / self.fanout;
            self.slots.resize(self.slots.len() + self.fanout, NONE);
            b as u32
        }
    }

    /// Frees every descendant of `id`, turning it into a leaf.
    /// Returns the number of nodes freed.
    pub fn make_leaf(&mut self, id: VertexId) -> usize {
        let block = self.nodes[id as usize].block;
        if block == NONE {
            return 0;
        }
        let mut freed = 0;
        let mut stack = vec![block];
        while let Some(b) = stack.pop() {
            let start = b as usize * self.fanout;
            for s in 0..self.fanout {
                let c = self.slots[start + s];
                if c != NONE {
                    let cb = self.nodes[c as usize].block;
                    if cb != NONE {
                        stack.push(cb);
                    }
                    self.free_nodes.push(c);
                    self.live -= 1;
                    freed += 1;
                }
            }
            self.free_blocks.push(b);
        }
        self.nodes[id as usize].block = NONE;
        freed
    }

    /// Removes `id` and all of its descendants. The slot it occupied in its
    /// parent becomes empty. Returns the number of nodes freed.
    pub fn remove(&mut self, id: VertexId) -> usize {
        let freed = self.make_leaf(id) + 1;
        let parent = self.nodes[id as usize].parent;
        if parent == NONE {
            self.root = NONE;
        } else {
            let pb = self.nodes[parent as usize].block as usize * self.fanout;
            for s in 0..self.fanout {
                if self.slots[pb + s] == id {
                    self.slots[pb + s] = NONE;
                }
            }
        }
        self.free_nodes.push(id);
        self.live -= 1;
        freed
    }

    /// Creates all children of a leaf. Does nothing on unit cells or
    /// internal nodes.
    pub fn subdivide(&mut self, id: VertexId) -> Vec<VertexId> {
        let idx = self.index(id);
        if idx.k() == 0 || !self.is_leaf(id) {
            return Vec::new();
        }
        let block = self.alloc_block();
        self.nodes[id as usize].block = block;
        (0..self.fanout)
            .map(|s| {
                let c = self.alloc_node(idx.child(s), id);
                self.slots[block as usize * self.fanout + s] = c;
                c
            })
            .collect()
    }

    /// Whether `id` is a live leaf, checked through its parent's slot.
    pub fn is_vertex(&self, id: VertexId) -> bool {
        let Some(node) = self.nodes.get(id as usize) else {
            return false;
        };
        if node.block != NONE {
            return false;
        }
        if id == self.root {
            return true;
        }
        let parent = &self.nodes[node.parent as usize];
        if node.parent == NONE || parent.block == NONE {
            return false;
        }
        let mut point = [0i64; crate::index::MAX_DIM];
        for (t, &c) in point.iter_mut().zip(node.index.p2()) {
            *t = c as i64;
        }
        let slot = parent.index.child_slot_for(&point[..self.dim]);
        self.slots[parent.block as usize * self.fanout + slot] == id
    }

    /// Node with exactly this index, if present.
    pub fn find(&self, idx: &NodeIndex) -> Option<VertexId> {
        if idx.dim() != self.dim || !self.root_index().contains_node(idx) {
            return None;
        }
        let mut buf = [0i64; crate::index::MAX_DIM];
        for (t, &c) in buf.iter_mut().zip(idx.p2()) {
            *t = c as i64;
        }
        let target = &buf[..self.dim];
        let mut id = self.root()?;
        loop {
            let cur = self.index(id);
            if cur.k() == idx.k() {
                return (cur == *idx).then_some(id);
            }
            id = self.child(id, cur.child_slot_for(target))?;
        }
    }

    /// Leaf whose half-open hypercube holds `point`, if that region was not
    /// removed.
    pub fn vertex_at(&self, point: &[f64]) -> Option<VertexId> {
        let mut id = self.root()?;
        if !self.index(id).contains_point(point) {
            return None;
        }
        while !self.is_leaf(id) {
            let cur = self.index(id);
            let mut slot = 0;
            for (j, (&x, &c)) in point.iter().zip(cur.p2()).enumerate() {
                if x * 2.0 >= c as f64 {
                    slot |= 1 << j;
                }
            }
            id = self.child(id, slot)?;
        }
        Some(id)
    }

    /// Ids of all leaves.
    pub fn vertex_ids(&self) -> Vec<VertexId> {
        let mut out = Vec::new();
        let Some(root) = self.root() else {
            return out;
        };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if self.is_leaf(id) {
                out.push(id);
            } else {
                stack.extend(self.children(id));
            }
        }
        out
    }

    /// All leaves in canonical `(k, p2)` order.
    pub fn vertices(&self) -> Vec<NodeIndex> {
        let mut v: Vec<NodeIndex> = self.vertex_ids().into_iter().map(|id| self.index(id)).collect();
        v.sort();
        v
    }

    /// Snapshot of every live node: index to (value, is-leaf).
    pub fn snapshot(&self) -> BTreeMap<NodeIndex, (Option<f64>, bool)> {
        let mut out = BTreeMap::new();
        let Some(root) = self.root() else {
            return out;
        };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            out.insert(self.index(id), (self.value(id), self.is_leaf(id)));
            stack.extend(self.children(id));
        }
        out
    }

    /// Refines or coarsens the tree around `ctx.current`.
    ///
    /// A node becomes a vertex when it is a finest cell, or when it passes
    /// the window test, holds no committed node, and does not touch the
    /// current cell. Finest cells that are blocked, and vertices that are
    /// ε-obstacles of the map, are removed together with their subtree.
    pub fn update(&mut self, ctx: &UpdateContext<'_>) -> UpdateStats {
        let mut stats = UpdateStats::default();
        let allocations_before = self.allocations;
        if self.root == NONE {
            self.root = self.alloc_node(self.root_index(), NONE);
        }
        let source = match ctx.backing {
            Backing::Map(t) => t.root_id(),
            Backing::Geometric => NONE,
        };
        if !self.update_node(self.root, source, ctx, &mut stats) {
            let root = self.root;
            stats.freed += self.remove(root);
        }
        stats.allocated = (self.allocations - allocations_before) as usize;
        stats
    }

    fn update_node(&mut self, id: u32, source: TreeNodeId, ctx: &UpdateContext<'_>, stats: &mut UpdateStats) -> bool {
        stats.visited += 1;
        let idx = self.nodes[id as usize].index;
        let (finest, value) = match ctx.backing {
            Backing::Map(t) => (t.is_leaf_id(source), Some(t.value_of_id(source))),
            Backing::Geometric => (idx.k() == 0, None),
        };
        self.nodes[id as usize].value = value;
        let stop = finest
            || (ctx.window.is_far(&idx, &ctx.current) && !ctx.visited.covers_any(&idx) && !idx.touches(&ctx.current));
        if stop {
            if finest && ctx.visited.is_blocked(&idx) {
                return false;
            }
            if let Some(v) = value {
                if is_eps_obstacle_value(v, self.dim, idx.k(), ctx.eps) {
                    return false;
                }
            }
            stats.freed += self.make_leaf(id);
            stats.stopped.push(idx);
            return true;
        }

        let mut block = self.nodes[id as usize].block;
        if block == NONE {
            block = self.alloc_block();
            self.nodes[id as usize].block = block;
        }
        let base = block as usize * self.fanout;
        let mut kept_any = false;
        for slot in 0..self.fanout {
            let child_source = match ctx.backing {
                Backing::Map(t) => t.child_id(source, slot),
                Backing::Geometric => NONE,
            };
            let mut child = self.slots[base + slot];
            if child == NONE {
                child = self.alloc_node(idx.child(slot), id);
                self.slots[base + slot] = child;
            }
            if self.update_node(child, child_source, ctx, stats) {
                kept_any = true;
            } else {
                stats.freed += self.make_leaf(child) + 1;
                self.free_nodes.push(child);
                self.live -= 1;
                self.slots[base + slot] = NONE;
            }
        }
        if !kept_any {
            // Every child was removed; the caller drops this node too.
            self.nodes[id as usize].block = NONE;
            self.free_blocks.push(block);
        }
        kept_any
    }
}

/// Convenience form of [`ReducedTree::update`] for a map, a current node and
/// a candidate path, with nothing blocked.
pub fn update_reduced_tree(
    tree: &OccupancyTree,
    reduced: &mut ReducedTree,
    current: NodeIndex,
    path: &[NodeIndex],
    eps: f64,
    alpha: f64,
) -> Result<UpdateStats> {
    if !tree.root_index().contains_node(&current) || current.dim() != tree.dim() {
        return Err(Error::OutOfBounds(current.center()));
    }
    let visited = VisitedIndex::from_path(tree.depth(), path);
    let ctx = UpdateContext {
        backing: Backing::Map(tree),
        current,
        visited: &visited,
        eps,
        window: WindowParams::new(alpha)?,
    };
    Ok(reduced.update(&ctx))
}
