//! Occupancy estimation from an obstacle predicate.
//!
//! Without a precomputed map a node's occupancy is estimated by querying the
//! predicate at random points of its hypercube. Small nodes (`2^{dk} <= n`)
//! are cheaper to count exactly, cell by cell, and are classified with the
//! plain ε threshold; larger nodes are sampled and classified with the
//! stricter (ε,γ) threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::bounds::k_min;
use crate::index::NodeIndex;
use crate::tree::is_eps_obstacle_value;

/// Point-membership query: `true` means the point is inside an obstacle.
///
/// Implementations must be pure. Points outside the world count as
/// obstacles.
pub trait ObstaclePredicate: Send + Sync {
    fn is_obstacle(&self, point: &[f64]) -> bool;
}

impl<F> ObstaclePredicate for F
where
    F: Fn(&[f64]) -> bool + Send + Sync,
{
    fn is_obstacle(&self, point: &[f64]) -> bool {
        self(point)
    }
}

/// How sample points are drawn inside a hypercube.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleScheme {
    /// Pick a unit cell uniformly and query its center.
    #[default]
    UnitCells,
    /// Query a uniformly distributed continuous point.
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleEstimate {
    pub index: NodeIndex,
    pub samples: u64,
    pub hits: u64,
}

impl SampleEstimate {
    /// `hits / samples`.
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }
}

/// Generator for the samples of one node, derived from the session seed and
/// the node index so results do not depend on evaluation order.
pub fn node_rng(seed: u64, idx: &NodeIndex) -> ChaCha8Rng {
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix(h ^ idx.k() as u64);
    for &c in idx.p2() {
        h = mix(h ^ c as u32 as u64);
    }
    ChaCha8Rng::seed_from_u64(h)
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `samples` points in the hypercube of `idx` and counts obstacles.
pub fn estimate_value<R: Rng>(
    idx: &NodeIndex,
    predicate: &dyn ObstaclePredicate,
    samples: u64,
    scheme: SampleScheme,
    rng: &mut R,
) -> SampleEstimate {
    assert!(samples >= 1, "at least one sample is required");
    let low = idx.hypercube().low();
    let side = idx.side();
    // Power-of-two range: masking a uniform word is exactly uniform.
    let mask = (1u64 << idx.k()) - 1;
    let mut point = vec![0.0; idx.dim()];
    let mut hits = 0;
    for _ in 0..samples {
        match scheme {
            SampleScheme::UnitCells => {
                for (x, &l) in point.iter_mut().zip(&low) {
                    *x = l + (rng.next_u64() & mask) as f64 + 0.5;
                }
            }
            SampleScheme::Continuous => {
                for (x, &l) in point.iter_mut().zip(&low) {
                    *x = l + rng.gen::<f64>() * side;
                }
            }
        }
        if predicate.is_obstacle(&point) {
            hits += 1;
        }
    }
    SampleEstimate {
        index: *idx,
        samples,
        hits,
    }
}

/// Exact occupancy: the fraction of unit cells of `idx` whose center is an
/// obstacle. Costs `2^{dk}` predicate calls.
pub fn exact_value(idx: &NodeIndex, predicate: &dyn ObstaclePredicate) -> f64 {
    let low = idx.hypercube().low();
    let side = 1usize << idx.k();
    let total = side.pow(idx.dim() as u32);
    let mut point = vec![0.0; idx.dim()];
    let mut offsets = vec![0usize; idx.dim()];
    let mut hits = 0usize;
    for _ in 0..total {
        for ((x, &l), &o) in point.iter_mut().zip(&low).zip(&offsets) {
            *x = l + o as f64 + 0.5;
        }
        if predicate.is_obstacle(&point) {
            hits += 1;
        }
        for o in offsets.iter_mut() {
            *o += 1;
            if *o < side {
                break;
            }
            *o = 0;
        }
    }
    hits as f64 / total as f64
}

/// `V̂ >= 1 - 2^{-dk} eps + gamma`.
pub fn is_eps_gamma_obstacle(estimate: &SampleEstimate, dim: usize, eps: f64, gamma: f64) -> bool {
    is_eps_gamma_obstacle_value(estimate.value(), dim, estimate.index.k(), eps, gamma)
}

pub fn is_eps_gamma_obstacle_value(value: f64, dim: usize, k: u32, eps: f64, gamma: f64) -> bool {
    value >= 1.0 - 0.5f64.powi((dim as u32 * k) as i32) * eps + gamma
}

/// Which branch of [`hybrid_classify`] produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifyMethod {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub value: f64,
    pub obstacle: bool,
    pub method: ClassifyMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub eps: f64,
    pub gamma: f64,
    pub samples: u64,
    pub seed: u64,
    pub scheme: SampleScheme,
}

/// Exact counting with the ε threshold up to `k_min(d, n)`, sampling with
/// the (ε,γ) threshold above.
pub fn hybrid_classify<R: Rng>(
    idx: &NodeIndex,
    predicate: &dyn ObstaclePredicate,
    eps: f64,
    gamma: f64,
    samples: u64,
    scheme: SampleScheme,
    rng: &mut R,
) -> Classification {
    let dim = idx.dim();
    if idx.k() as i32 <= k_min(dim, samples) {
        let value = exact_value(idx, predicate);
        Classification {
            value,
            obstacle: is_eps_obstacle_value(value, dim, idx.k(), eps),
            method: ClassifyMethod::Exact,
        }
    } else {
        let est = estimate_value(idx, predicate, samples, scheme, rng);
        Classification {
            value: est.value(),
            obstacle: is_eps_gamma_obstacle(&est, dim, eps, gamma),
            method: ClassifyMethod::Sampled,
        }
    }
}

/// Per-session memo of node classifications. Each node is evaluated at most
/// once; later lookups return the stored result.
#[derive(Clone, Debug)]
pub struct EstimateCache {
    params: SamplingParams,
    entries: FxHashMap<NodeIndex, Classification>,
    sampled: usize,
    predicate_calls: u64,
}

impl EstimateCache {
    pub fn new(params: SamplingParams) -> Self {
        EstimateCache {
            params,
            entries: FxHashMap::default(),
            sampled: 0,
            predicate_calls: 0,
        }
    }

    pub fn params(&self) -> &SamplingParams {
        &self.params
    }

    pub fn get(&self, idx: &NodeIndex) -> Option<&Classification> {
        self.entries.get(idx)
    }

    pub fn classify(&mut self, idx: &NodeIndex, predicate: &dyn ObstaclePredicate) -> Classification {
        if let Some(c) = self.entries.get(idx) {
            return *c;
        }
        let p = self.params;
        let dim = idx.dim();
        let c = if idx.k() as i32 > k_min(dim, p.samples) {
            let mut rng = node_rng(p.seed, idx);
            let est = estimate_value(idx, predicate, p.samples, p.scheme, &mut rng);
            self.sampled += 1;
            self.predicate_calls += p.samples;
            Classification {
                value: est.value(),
                obstacle: is_eps_gamma_obstacle(&est, dim, p.eps, p.gamma),
                method: ClassifyMethod::Sampled,
            }
        } else {
            // Exact counts compose: above scale 1 a node's value is the mean
            // of its (cached) children's, so each scale-1 block is counted
            // at most once per session.
            let value = if idx.k() <= 1 {
                self.predicate_calls += 1 << (idx.k() * dim as u32);
                exact_value(idx, predicate)
            } else {
                let fanout = idx.fanout();
                let sum: f64 = (0..fanout).map(|i| self.classify(&idx.child(i), predicate).value).sum();
                sum / fanout as f64
            };
            Classification {
                value,
                obstacle: is_eps_obstacle_value(value, dim, idx.k(), p.eps),
                method: ClassifyMethod::Exact,
            }
        };
        self.entries.insert(*idx, c);
        c
    }

    /// Nodes evaluated so far.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nodes whose value came from sampling.
    pub fn sampled_nodes(&self) -> usize {
        self.sampled
    }

    pub fn predicate_calls(&self) -> u64 {
        self.predicate_calls
    }
}
