//! Pick-up and drop probabilities.
//!
//! ACLUSTER composes two independent response thresholds: `chi` reacts to
//! the number of items nearby, while `delta` (drop) and `epsilon` (pick)
//! react to feature-space dissimilarity. The density-based LF rules and the
//! classic threshold forms they derive from are provided for comparison.

use crate::config::{FunctionType, SubAssignment};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::{Grid, Pos};

/// Response threshold `s^m / (s^m + theta^m)` applied to the item count.
#[inline]
pub fn chi(n_items: usize, theta_count: f64, steepness: f64) -> f64 {
    if n_items == 0 {
        return 0.0;
    }
    let s = (n_items as f64).powf(steepness);
    s / (s + theta_count.powf(steepness))
}

/// Drop threshold on dissimilarity: `(k1 / (k1 + d))^2`.
#[inline]
pub fn delta_drop(d: f64, k1: f64) -> f64 {
    let r = k1 / (k1 + d);
    r * r
}

/// Pick threshold on dissimilarity: `(d / (k2 + d))^2`.
#[inline]
pub fn epsilon_pick(d: f64, k2: f64) -> f64 {
    let r = d / (k2 + d);
    r * r
}

/// Pick/drop probabilities for function types 1 to 3.
pub fn compose_probabilities(
    variant: FunctionType,
    sub: SubAssignment,
    chi_val: f64,
    eps_val: f64,
    delta_val: f64,
) -> Result<(f64, f64)> {
    use FunctionType::*;
    use SubAssignment::*;
    let pair = match (variant, sub) {
        (Type1, _) | (Type2, A) => ((1.0 - chi_val) * eps_val, chi_val * delta_val),
        (Type2, B) | (Type3, B) => (eps_val, delta_val),
        (Type3, A) => (1.0 - chi_val, chi_val),
        (Type4, _) => return Err(Error::Misuse(variant.to_string())),
    };
    Ok(pair)
}

/// LF local density of `item` at `pos`: the mean of
/// `1 - d(item, o_j)/alpha` over the `s x s` window (centre excluded),
/// divided by `s^2` and floored at zero.
pub fn lf_local_density(grid: &Grid, pos: Pos, item: u32, dataset: &Dataset, s: usize, alpha: f64) -> f64 {
    let r = (s / 2) as isize;
    let mut sum = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx == 0 && dy == 0 {
                continue;
            }
            if let Some(other) = grid.item_at(grid.offset(pos, dx, dy)) {
                sum += 1.0 - dataset.distance(item, other) / alpha;
            }
        }
    }
    (sum / (s * s) as f64).max(0.0)
}

/// `P_p = (k1/(k1+f))^2`; `P_d = 2f` below `k2`, otherwise 1.
pub fn lf_probabilities(f: f64, k1: f64, k2: f64) -> (f64, f64) {
    let pick = {
        let r = k1 / (k1 + f);
        r * r
    };
    let drop = if f < k2 { (2.0 * f).min(1.0) } else { 1.0 };
    (pick, drop)
}

/// Threshold forms driven by the perceived item fraction `f`:
/// `P_p = (k1/(k1+f))^2`, `P_d = (f/(k2+f))^2`.
pub fn bm_probabilities(f_fraction: f64, k1: f64, k2: f64) -> (f64, f64) {
    (delta_drop(f_fraction, k1), epsilon_pick(f_fraction, k2))
}
