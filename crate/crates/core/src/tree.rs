//! The full multiscale occupancy map.
//!
//! Nodes live in one arena; the `2^d` children of an internal node occupy a
//! contiguous block in canonical child order. A node has either all of its
//! children or none.

use crate::error::{Error, Result};
use crate::grid::GridWorld;
use crate::index::NodeIndex;

pub type TreeNodeId = u32;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct TreeNode {
    value: f64,
    first_child: u32,
}

/// Obstacle threshold `1 - 2^{-dk} eps` of a cell at scale `k`.
#[inline]
pub fn eps_obstacle_threshold(dim: usize, k: u32, eps: f64) -> f64 {
    1.0 - 0.5f64.powi((dim as u32 * k) as i32) * eps
}

/// Whether a cell with occupancy `value` at scale `k` is an ε-obstacle.
#[inline]
pub fn is_eps_obstacle_value(value: f64, dim: usize, k: u32, eps: f64) -> bool {
    value >= eps_obstacle_threshold(dim, k, eps)
}

#[derive(Clone, Debug)]
pub struct OccupancyTree {
    dim: usize,
    depth: u32,
    nodes: Vec<TreeNode>,
}

impl OccupancyTree {
    /// Builds the pruned tree: every subtree whose unit cells are all free
    /// or all obstacles is collapsed into a single leaf.
    pub fn build_from_grid(world: &GridWorld) -> Self {
        Self::build(world, true)
    }

    /// Builds the complete tree with every leaf at unit scale.
    pub fn build_full(world: &GridWorld) -> Self {
        Self::build(world, false)
    }

    fn build(world: &GridWorld, collapse: bool) -> Self {
        let mut tree = OccupancyTree {
            dim: world.dim(),
            depth: world.depth(),
            nodes: vec![TreeNode {
                value: 0.0,
                first_child: NONE,
            }],
        };
        let mut corner = vec![0usize; world.dim()];
        let value = tree.build_node(world, 0, world.depth(), &mut corner, collapse);
        tree.nodes[0].value = value;
        tree
    }

    /// Fills the subtree rooted at `id` whose lower corner (in cells) is
    /// `corner`, returning its value.
    fn build_node(&mut self, world: &GridWorld, id: usize, k: u32, corner: &mut [usize], collapse: bool) -> f64 {
        if k == 0 {
            let v = if world.get(corner) { 1.0 } else { 0.0 };
            self.nodes[id].value = v;
            return v;
        }
        let fanout = 1usize << self.dim;
        let block = self.nodes.len();
        self.nodes.resize(
            block + fanout,
            TreeNode {
                value: 0.0,
                first_child: NONE,
            },
        );
        let half = 1usize << (k - 1);
        let mut sum = 0.0;
        let mut uniform = true;
        let mut first_value = None;
        for slot in 0..fanout {
            for (j, c) in corner.iter_mut().enumerate() {
                if slot >> j & 1 == 1 {
                    *c += half;
                }
            }
            let v = self.build_node(world, block + slot, k - 1, corner, collapse);
            for (j, c) in corner.iter_mut().enumerate() {
                if slot >> j & 1 == 1 {
                    *c -= half;
                }
            }
            sum += v;
            let leaf = self.nodes[block + slot].first_child == NONE;
            match first_value {
                None => first_value = Some(v),
                Some(f) => uniform &= f == v,
            }
            uniform &= leaf && (v == 0.0 || v == 1.0);
        }
        if collapse && uniform {
            self.nodes.truncate(block);
            self.nodes[id] = TreeNode {
                value: first_value.unwrap_or(0.0),
                first_child: NONE,
            };
            return self.nodes[id].value;
        }
        let value = sum / fanout as f64;
        self.nodes[id] = TreeNode {
            value,
            first_child: block as u32,
        };
        value
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_id(&self) -> TreeNodeId {
        0
    }

    pub fn root_index(&self) -> NodeIndex {
        NodeIndex::root(self.dim, self.depth)
    }

    #[inline]
    pub fn is_leaf_id(&self, id: TreeNodeId) -> bool {
        self.nodes[id as usize].first_child == NONE
    }

    #[inline]
    pub fn value_of_id(&self, id: TreeNodeId) -> f64 {
        self.nodes[id as usize].value
    }

    /// Child `slot` of an internal node.
    #[inline]
    pub fn child_id(&self, id: TreeNodeId, slot: usize) -> TreeNodeId {
        let first = self.nodes[id as usize].first_child;
        debug_assert_ne!(first, NONE);
        first + slot as u32
    }

    fn check_index(&self, idx: &NodeIndex) -> Result<()> {
        if idx.dim() != self.dim || idx.k() > self.depth {
            return Err(Error::InvalidIndex(format!("{idx:?} does not belong to this world")));
        }
        if !self.root_index().contains_node(idx) {
            return Err(Error::OutOfBounds(idx.center()));
        }
        Ok(())
    }

    /// Descends towards `idx`, returning the stored node reached and its
    /// index: `idx` itself, or the collapsed leaf that covers it.
    pub fn locate(&self, idx: &NodeIndex) -> Result<(TreeNodeId, NodeIndex)> {
        self.check_index(idx)?;
        let target: Vec<i64> = idx.p2().iter().map(|&c| c as i64).collect();
        let mut id = self.root_id();
        let mut cur = self.root_index();
        while cur.k() > idx.k() && !self.is_leaf_id(id) {
            let slot = cur.child_slot_for(&target);
            id = self.child_id(id, slot);
            cur = cur.child(slot);
        }
        Ok((id, cur))
    }

    /// Obstacle probability of any cell of the dyadic partition.
    pub fn value(&self, idx: &NodeIndex) -> Result<f64> {
        self.locate(idx).map(|(id, _)| self.value_of_id(id))
    }

    /// Whether `idx` is a node actually stored (not inside a collapsed leaf).
    pub fn contains_node(&self, idx: &NodeIndex) -> bool {
        matches!(self.locate(idx), Ok((_, reached)) if reached == *idx)
    }

    /// Whether `idx` is a stored leaf.
    pub fn is_leaf(&self, idx: &NodeIndex) -> bool {
        matches!(self.locate(idx), Ok((id, reached)) if reached == *idx && self.is_leaf_id(id))
    }

    pub fn is_eps_obstacle(&self, idx: &NodeIndex, eps: f64) -> Result<bool> {
        let v = self.value(idx)?;
        Ok(is_eps_obstacle_value(v, self.dim, idx.k(), eps))
    }

    /// Deepest stored node whose half-open hypercube holds `point`.
    pub fn leaf_at(&self, point: &[f64]) -> Result<NodeIndex> {
        self.leaf_id_at(point).map(|(_, idx)| idx)
    }

    pub fn leaf_id_at(&self, point: &[f64]) -> Result<(TreeNodeId, NodeIndex)> {
        let root = self.root_index();
        if point.len() != self.dim || !root.contains_point(point) {
            return Err(Error::OutOfBounds(point.to_vec()));
        }
        // Doubling is exact for any f64 that is not huge, and the slot test
        // compares against doubled centers.
        let mut id = self.root_id();
        let mut cur = root;
        while !self.is_leaf_id(id) {
            let mut slot = 0;
            for (j, (&x, &c)) in point.iter().zip(cur.p2()).enumerate() {
                if x * 2.0 >= c as f64 {
                    slot |= 1 << j;
                }
            }
            id = self.child_id(id, slot);
            cur = cur.child(slot);
        }
        Ok((id, cur))
    }

    /// Every stored leaf with its value, in depth-first canonical order.
    pub fn leaves(&self) -> Vec<(NodeIndex, f64)> {
        let mut out = Vec::new();
        self.visit(self.root_id(), self.root_index(), &mut |id, idx| {
            if self.is_leaf_id(id) {
                out.push((idx, self.value_of_id(id)));
            }
        });
        out
    }

    /// Every stored node with its value.
    pub fn nodes(&self) -> Vec<(NodeIndex, f64, bool)> {
        let mut out = Vec::new();
        self.visit(self.root_id(), self.root_index(), &mut |id, idx| {
            out.push((idx, self.value_of_id(id), self.is_leaf_id(id)));
        });
        out
    }

    fn visit(&self, id: TreeNodeId, idx: NodeIndex, f: &mut impl FnMut(TreeNodeId, NodeIndex)) {
        f(id, idx);
        if !self.is_leaf_id(id) {
            for slot in 0..idx.fanout() {
                self.visit(self.child_id(id, slot), idx.child(slot), f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_value(world: &GridWorld, idx: &NodeIndex) -> f64 {
        let h = idx.hypercube();
        let low: Vec<usize> = h.low().iter().map(|&x| x as usize).collect();
        let side = h.side() as usize;
        let mut count = 0usize;
        let total = side.pow(world.dim() as u32);
        for off in 0..total {
            let mut rem = off;
            let coords: Vec<usize> = low
                .iter()
                .map(|&l| {
                    let c = l + rem % side;
                    rem /= side;
                    c
                })
                .collect();
            if world.get(&coords) {
                count += 1;
            }
        }
        count as f64 / total as f64
    }

    fn random_world(dim: usize, depth: u32, density: f64, seed: u64) -> GridWorld {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = GridWorld::cell_count_for(dim, depth).unwrap();
        GridWorld::new(dim, depth, (0..n).map(|_| rng.gen_bool(density)).collect()).unwrap()
    }

    fn random_index(rng: &mut ChaCha8Rng, dim: usize, depth: u32) -> NodeIndex {
        let mut idx = NodeIndex::root(dim, depth);
        let k = rng.gen_range(0..=depth);
        while idx.k() > k {
            idx = idx.child(rng.gen_range(0..idx.fanout()));
        }
        idx
    }

    #[test]
    fn uniform_free_collapses_to_root() {
        let w = GridWorld::empty(2, 2).unwrap();
        let t = OccupancyTree::build_from_grid(&w);
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.value(&t.root_index()).unwrap(), 0.0);
        assert!(t.is_leaf(&t.root_index()));
    }

    #[test]
    fn one_obstacle_of_four() {
        let w = GridWorld::new(2, 1, vec![true, false, false, false]).unwrap();
        let t = OccupancyTree::build_from_grid(&w);
        assert_eq!(t.value(&t.root_index()).unwrap(), 0.25);
        assert_eq!(t.leaves().len(), 4);
        assert!(t.leaves().iter().all(|(idx, _)| idx.k() == 0));
    }

    #[test]
    fn full_obstacle_root() {
        let t = OccupancyTree::build_from_grid(&GridWorld::full(3, 2).unwrap());
        assert_eq!(t.value(&t.root_index()).unwrap(), 1.0);
        assert_eq!(t.node_count(), 1);
    }

    #[test]
    fn three_of_sixteen() {
        let mut w = GridWorld::empty(2, 3).unwrap();
        w.set(&[0, 0], true);
        w.set(&[3, 1], true);
        w.set(&[2, 3], true);
        let t = OccupancyTree::build_from_grid(&w);
        let quad = NodeIndex::from_center(3, 2, &[2.0, 2.0]).unwrap();
        assert_eq!(t.value(&quad).unwrap(), 0.1875);
    }

    #[test]
    fn random_grid_matches_brute_force() {
        let w = random_world(2, 3, 0.4, 11);
        let t = OccupancyTree::build_from_grid(&w);
        let root = t.value(&t.root_index()).unwrap();
        assert_eq!(root, w.obstacle_count() as f64 / 64.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let internal: Vec<NodeIndex> = t
            .nodes()
            .into_iter()
            .filter(|(_, _, leaf)| !leaf)
            .map(|(i, _, _)| i)
            .collect();
        for _ in 0..20 {
            let idx = internal[rng.gen_range(0..internal.len())];
            assert_eq!(t.value(&idx).unwrap(), brute_value(&w, &idx));
        }
    }

    #[test]
    fn pruning_soundness_and_consistency() {
        for seed in 0..10 {
            let dim = 2 + seed as usize % 2;
            let w = random_world(dim, 3, 0.15, seed);
            let t = OccupancyTree::build_from_grid(&w);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            for _ in 0..200 {
                let idx = random_index(&mut rng, dim, 3);
                assert_eq!(t.value(&idx).unwrap(), brute_value(&w, &idx));
            }
            for (idx, v, leaf) in t.nodes() {
                if !leaf {
                    let mean: f64 =
                        idx.children().unwrap().iter().map(|c| t.value(c).unwrap()).sum::<f64>() / idx.fanout() as f64;
                    assert!((mean - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn full_build_keeps_unit_leaves() {
        let w = GridWorld::empty(2, 2).unwrap();
        let t = OccupancyTree::build_full(&w);
        assert_eq!(t.node_count(), 1 + 4 + 16);
        assert!(t.leaves().iter().all(|(idx, v)| idx.k() == 0 && *v == 0.0));
    }

    #[test]
    fn eps_obstacle_thresholds() {
        assert!(is_eps_obstacle_value(1.0, 2, 0, 0.9));
        assert!(!is_eps_obstacle_value(0.0, 2, 0, 0.9));
        // 1 - 2^{-2} * 0.9
        assert!((eps_obstacle_threshold(2, 1, 0.9) - 0.775).abs() < 1e-15);
        assert!(is_eps_obstacle_value(0.95, 2, 1, 0.9));
        assert!(!is_eps_obstacle_value(0.77, 2, 1, 0.9));
        // 1 - 2^{-4} * 0.9
        assert!((eps_obstacle_threshold(2, 2, 0.9) - 0.94375).abs() < 1e-15);
    }

    #[test]
    fn all_obstacle_ancestors_stay_obstacles() {
        let w = GridWorld::full(2, 3).unwrap();
        let t = OccupancyTree::build_full(&w);
        for eps in [0.0, 0.5, 0.99] {
            for (idx, _, _) in t.nodes() {
                assert!(t.is_eps_obstacle(&idx, eps).unwrap());
            }
        }
    }

    #[test]
    fn value_rejects_foreign_index() {
        let t = OccupancyTree::build_from_grid(&GridWorld::empty(2, 2).unwrap());
        let other = NodeIndex::root(2, 3);
        assert!(t.value(&other).is_err());
        let wrong_dim = NodeIndex::root(3, 2);
        assert!(t.value(&wrong_dim).is_err());
    }

    #[test]
    fn leaf_at_rules() {
        let t = OccupancyTree::build_from_grid(&GridWorld::empty(2, 2).unwrap());
        assert_eq!(t.leaf_at(&[0.2, 0.3]).unwrap(), t.root_index());
        assert!(t.leaf_at(&[4.0, 1.0]).is_err());

        let mut w = GridWorld::empty(2, 2).unwrap();
        w.set(&[0, 0], true);
        let t = OccupancyTree::build_from_grid(&w);
        let leaf = t.leaf_at(&[0.5, 0.5]).unwrap();
        assert_eq!(leaf.k(), 0);
        assert_eq!(leaf.hypercube().low(), vec![0.0, 0.0]);
        // Shared corner of four unit cells goes to the cell whose lower
        // corner it is.
        let corner = t.leaf_at(&[1.0, 1.0]).unwrap();
        assert_eq!(corner.hypercube().low(), vec![1.0, 1.0]);
    }

    #[test]
    fn leaf_at_contains_point() {
        let w = random_world(2, 4, 0.2, 3);
        let t = OccupancyTree::build_from_grid(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = [rng.gen_range(0.0..16.0), rng.gen_range(0.0..16.0)];
            let leaf = t.leaf_at(&p).unwrap();
            let h = leaf.hypercube();
            for (j, &x) in p.iter().enumerate() {
                assert!(h.low()[j] <= x && x < h.high()[j]);
            }
            assert!(t.is_leaf(&leaf));
        }
    }
}
