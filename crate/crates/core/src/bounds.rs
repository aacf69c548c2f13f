//! Failure bounds of the sampling planner.
//!
//! A node at scale `k` can be wrongly classified as an obstacle only when
//! `k_min < k < k_max`: at or below `k_min` its value is counted exactly,
//! and at or above `k_max` the (ε,γ) threshold exceeds one. Each such node
//! misfires with probability at most `exp(-2 γ² n)` (Hoeffding), which gives
//! a closed-form bound on the probability that the planner misses a path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs of [`failure_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub depth: u32,
    pub dim: usize,
    pub eps: f64,
    pub gamma: f64,
    pub samples: u64,
    /// Number of independent, equally sized solution regions.
    pub regions: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.samples == 0 {
            return Err(Error::Parameter("sample count must be at least 1".into()));
        }
        if !(self.regions >= 1.0 && self.regions.is_finite()) {
            return Err(Error::Parameter(format!(
                "region count must be at least 1, got {}",
                self.regions
            )));
        }
        Ok(())
    }
}

/// `ceil(log2(eps / gamma) / d)`: the smallest `k` with `2^{dk} gamma >= eps`.
///
/// Scaling by a power of two is exact in floating point, so the comparison
/// needs no logarithm and powers of two land on the right integer.
pub fn k_max(dim: usize, eps: f64, gamma: f64) -> i32 {
    let d = dim as i32;
    let estimate = ((eps / gamma).log2() / dim as f64).floor() as i32;
    let mut k = estimate - 1;
    while scaled(gamma, d * k) < eps {
        k += 1;
    }
    while scaled(gamma, d * (k - 1)) >= eps {
        k -= 1;
    }
    k
}

fn scaled(x: f64, exp: i32) -> f64 {
    x * 2f64.powi(exp)
}

/// `floor(log2(n) / d)`: the largest `k` with `2^{dk} <= n`.
pub fn k_min(dim: usize, samples: u64) -> i32 {
    assert!(samples >= 1, "sample count must be positive");
    let log2 = 63 - samples.leading_zeros();
    (log2 / dim as u32) as i32
}

/// `exp(-2 gamma^2 n)`.
pub fn misclassification_bound(gamma: f64, samples: u64) -> f64 {
    (-2.0 * gamma * gamma * samples as f64).exp()
}

/// Number of nodes with `k_min < k < k_max` in closed form:
/// `(2^{d(l - k_min)} - 2^{d(l - k_max + 1)}) / (2^d - 1)`.
///
/// Scales above the depth contribute fractional terms, exactly as the
/// closed form prescribes.
pub fn nb_occ(depth: u32, dim: usize, k_min: i32, k_max: i32) -> f64 {
    if k_min >= k_max - 1 {
        return 0.0;
    }
    let d = dim as i32;
    let l = depth as i32;
    let high = 2f64.powi(d * (l - k_min));
    let low = 2f64.powi(d * (l - k_max + 1));
    (high - low) / (2f64.powi(d) - 1.0)
}

/// Upper bound on the probability that the sampling planner fails:
/// `(1 - (1 - exp(-2 γ² n))^{nb_occ / Z})^Z`, clamped to `[0, 1]`.
pub fn failure_bound(params: &BoundParams) -> f64 {
    let kmin = k_min(params.dim, params.samples);
    let kmax = k_max(params.dim, params.eps, params.gamma);
    let occurrences = nb_occ(params.depth, params.dim, kmin, kmax);
    if occurrences == 0.0 {
        return 0.0;
    }
    let p = misclassification_bound(params.gamma, params.samples);
    // (1 - p)^e computed as exp(e * ln(1 - p)) so that tiny p keep their
    // precision.
    let exponent = occurrences / params.regions;
    let region_failure = -(exponent * (-p).ln_1p()).exp_m1();
    region_failure.powf(params.regions).clamp(0.0, 1.0)
}

/// `(n, bound)` for every `n` in `n_lo..=n_hi`.
pub fn bound_series(base: &BoundParams, n_lo: u64, n_hi: u64) -> Vec<(u64, f64)> {
    (n_lo.max(1)..=n_hi)
        .map(|n| {
            let p = BoundParams { samples: n, ..*base };
            (n, failure_bound(&p))
        })
        .collect()
}
