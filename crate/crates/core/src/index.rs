//! Dyadic cell addressing.
//!
//! A cell is identified by its scale `k` (side length `2^k` world units) and
//! its center. Centers of unit cells sit on half-integers, so every center is
//! stored doubled: `p2 = 2 * p`. All geometric predicates below work on these
//! doubled integers and are exact.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

/// Largest supported tree depth. Doubled coordinates must fit in `i32`.
pub const MAX_DEPTH: u32 = 28;

/// Identifies the dyadic cell `n_{k,p}`.
///
/// Unused trailing coordinates are always zero, so derived equality and
/// hashing only see the `dim` meaningful components.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeIndex {
    k: u8,
    dim: u8,
    p2: [i32; MAX_DIM],
}

impl NodeIndex {
    /// The root cell of a world of side `2^depth`.
    pub fn root(dim: usize, depth: u32) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        assert!(depth <= MAX_DEPTH, "depth {depth} out of range");
        let mut p2 = [0; MAX_DIM];
        for c in p2.iter_mut().take(dim) {
            *c = 1 << depth;
        }
        NodeIndex {
            k: depth as u8,
            dim: dim as u8,
            p2,
        }
    }

    /// Builds an index from a scale and doubled center, checking that the
    /// center lies on the dyadic grid of that scale and inside a world of
    /// side `2^depth`.
    pub fn new(depth: u32, k: u32, p2: &[i32]) -> Result<Self> {
        let dim = p2.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if depth > MAX_DEPTH {
            return Err(Error::Depth(depth));
        }
        if k > depth {
            return Err(Error::InvalidIndex(format!("scale {k} exceeds depth {depth}")));
        }
        let step = 1i64 << (k + 1);
        let half = 1i64 << k;
        let upper = 1i64 << (depth + 1);
        for &c in p2 {
            let c = c as i64;
            if c.rem_euclid(step) != half {
                return Err(Error::InvalidIndex(format!(
                    "doubled coordinate {c} is not a center at scale {k}"
                )));
            }
            if c <= 0 || c >= upper {
                return Err(Error::InvalidIndex(format!(
                    "doubled coordinate {c} outside world of depth {depth}"
                )));
            }
        }
        Ok(Self::from_parts(k, p2))
    }

    /// Builds an index from a center given in world units.
    pub fn from_center(depth: u32, k: u32, center: &[f64]) -> Result<Self> {
        let mut p2 = [0i32; MAX_DIM];
        for (dst, &c) in p2.iter_mut().zip(center) {
            let doubled = c * 2.0;
            if doubled.fract() != 0.0 || doubled.abs() > i32::MAX as f64 {
                return Err(Error::InvalidIndex(format!("{c} is not a half-integer")));
            }
            *dst = doubled as i32;
        }
        Self::new(depth, k, &p2[..center.len().min(MAX_DIM)])
    }

    /// Unchecked constructor for indices derived from valid ones.
    pub(crate) fn from_parts(k: u32, p2: &[i32]) -> Self {
        let mut buf = [0; MAX_DIM];
        buf[..p2.len()].copy_from_slice(p2);
        NodeIndex {
            k: k as u8,
            dim: p2.len() as u8,
            p2: buf,
        }
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k as u32
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Doubled center coordinates.
    #[inline]
    pub fn p2(&self) -> &[i32] {
        &self.p2[..self.dim as usize]
    }

    /// Side length in world units.
    #[inline]
    pub fn side(&self) -> f64 {
        (1u64 << self.k) as f64
    }

    /// Center in world units.
    pub fn center(&self) -> Vec<f64> {
        self.p2().iter().map(|&c| c as f64 / 2.0).collect()
    }

    pub fn hypercube(&self) -> Hypercube {
        Hypercube { index: *self }
    }

    /// Number of children of an internal node.
    #[inline]
    pub fn fanout(&self) -> usize {
        1 << self.dim
    }

    /// Child number `i` in canonical order: bit `j` of `i` set means the
    /// child lies on the positive side of axis `j`.
    pub fn child(&self, i: usize) -> Self {
        debug_assert!(self.k > 0 && i < self.fanout());
        // p + 2^{k-2} e_i in world units is p2 + 2^{k-1} e_i doubled.
        let offset = 1i32 << (self.k - 1);
        let mut out = *self;
        out.k -= 1;
        for j in 0..self.dim as usize {
            if i >> j & 1 == 1 {
                out.p2[j] += offset;
            } else {
                out.p2[j] -= offset;
            }
        }
        out
    }

    /// All `2^d` children in canonical order.
    pub fn children(&self) -> Result<Vec<NodeIndex>> {
        if self.k == 0 {
            return Err(Error::NoChildren(*self));
        }
        Ok((0..self.fanout()).map(|i| self.child(i)).collect())
    }

    /// The parent cell, if this is not the root of a world of `depth`.
    pub fn parent(&self, depth: u32) -> Option<Self> {
        if self.k() >= depth {
            return None;
        }
        let half = 1i32 << self.k;
        let mut out = *self;
        out.k += 1;
        for j in 0..self.dim as usize {
            // The parent center is the child center moved by half a child
            // side towards the nearest multiple of 2^{k+1}.
            let c = self.p2[j];
            let step = 1i32 << (self.k + 2);
            out.p2[j] = if c.rem_euclid(step) == half { c + half } else { c - half };
        }
        Some(out)
    }

    /// Which child of `self` holds a doubled point, with half-open cells
    /// (points on the center plane go to the positive side).
    #[inline]
    pub fn child_slot_for(&self, point2: &[i64]) -> usize {
        let mut slot = 0;
        for (j, (&x, &c)) in point2.iter().zip(&self.p2[..self.dim as usize]).enumerate() {
            if x >= c as i64 {
                slot |= 1 << j;
            }
        }
        slot
    }

    /// Half-open containment of a doubled point: `low <= x < high` per axis.
    pub fn contains_point2(&self, point2: &[i64]) -> bool {
        let half = 1i64 << self.k;
        self.p2()
            .iter()
            .zip(point2)
            .all(|(&c, &x)| x >= c as i64 - half && x < c as i64 + half)
    }

    /// Half-open containment of a point in world units.
    pub fn contains_point(&self, point: &[f64]) -> bool {
        let half = self.side() / 2.0;
        self.p2().iter().zip(point).all(|(&c, &x)| {
            let c = c as f64 / 2.0;
            x >= c - half && x < c + half
        })
    }

    /// Whether `other` is `self` or lies inside it.
    pub fn contains_node(&self, other: &NodeIndex) -> bool {
        if other.k > self.k {
            return false;
        }
        let reach = (1i64 << self.k) - (1i64 << other.k);
        self.p2()
            .iter()
            .zip(other.p2())
            .all(|(&a, &b)| (a as i64 - b as i64).abs() <= reach)
    }

    /// Whether a doubled point lies strictly inside the open hypercube.
    pub fn strictly_contains_point2(&self, point2: &[i32]) -> bool {
        let half = 1i64 << self.k;
        self.p2()
            .iter()
            .zip(point2)
            .all(|(&c, &x)| (x as i64 - c as i64).abs() < half)
    }

    /// Whether the closed hypercubes of `self` and `other` intersect.
    pub fn touches(&self, other: &NodeIndex) -> bool {
        let reach = (1i64 << self.k) + (1i64 << other.k);
        self.p2()
            .iter()
            .zip(other.p2())
            .all(|(&a, &b)| (a as i64 - b as i64).abs() <= reach)
    }

    /// Squared distance between centers, in doubled units (so 4x the world
    /// squared distance).
    pub fn dist2_doubled(&self, other: &NodeIndex) -> i64 {
        self.p2()
            .iter()
            .zip(other.p2())
            .map(|(&a, &b)| {
                let d = a as i64 - b as i64;
                d * d
            })
            .sum()
    }

    /// Euclidean distance between centers in world units.
    pub fn distance(&self, other: &NodeIndex) -> f64 {
        (self.dist2_doubled(other) as f64).sqrt() / 2.0
    }
}

impl PartialOrd for NodeIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: scale first, then doubled center lexicographically.
impl Ord for NodeIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k
            .cmp(&other.k)
            .then_with(|| self.dim.cmp(&other.dim))
            .then_with(|| self.p2().cmp(other.p2()))
    }
}

impl fmt::Debug for NodeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n(k={}, p=[", self.k)?;
        for (i, c) in self.p2().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", *c as f64 / 2.0)?;
        }
        write!(f, "])")
    }
}

impl fmt::Display for NodeIndex {
    /// `k x1 ... xd`, centers in decimal.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.k)?;
        for c in self.p2() {
            write!(f, " {}", *c as f64 / 2.0)?;
        }
        Ok(())
    }
}

/// Geometric view of a [`NodeIndex`]: the closed box `[low, high]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hypercube {
    index: NodeIndex,
}

impl Hypercube {
    /// Doubled lower corner.
    pub fn low2(&self) -> Vec<i64> {
        let half = 1i64 << self.index.k;
        self.index.p2().iter().map(|&c| c as i64 - half).collect()
    }

    /// Doubled upper corner.
    pub fn high2(&self) -> Vec<i64> {
        let half = 1i64 << self.index.k;
        self.index.p2().iter().map(|&c| c as i64 + half).collect()
    }

    pub fn low(&self) -> Vec<f64> {
        self.low2().into_iter().map(|c| c as f64 / 2.0).collect()
    }

    pub fn high(&self) -> Vec<f64> {
        self.high2().into_iter().map(|c| c as f64 / 2.0).collect()
    }

    pub fn side(&self) -> f64 {
        self.index.side()
    }
}
