//! Pheromone field dynamics and the stigmergic movement rule.
//!
//! An agent at cell `k` with heading `h` moves to neighbour `i` with
//! probability proportional to `W(sigma_i) * w(delta(h, i))`, where `W` is the
//! saturating pheromone weighting and `w` penalises turning. Cells holding
//! another agent are not admissible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::grid::{Grid, Pos};

/// One of the 8 compass directions, indexed like [`crate::grid::OFFSETS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Heading(u8);

impl Heading {
    pub fn new(direction: u8) -> Option<Self> {
        (direction < 8).then_some(Heading(direction))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Heading(rng.random_range(0..8))
    }
}

/// Turning weights indexed by the magnitude of the heading change (0..=4).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionWeights(pub [f64; 5]);

impl Default for DirectionWeights {
    fn default() -> Self {
        DirectionWeights([1.0, 1.0 / 2.0, 1.0 / 4.0, 1.0 / 12.0, 1.0 / 20.0])
    }
}

impl DirectionWeights {
    /// Requires strictly positive weights that never increase with the turn size.
    pub fn new(w: [f64; 5]) -> Option<Self> {
        let ok = w.iter().all(|v| v.is_finite() && *v > 0.0) && w.windows(2).all(|p| p[1] <= p[0]);
        ok.then_some(DirectionWeights(w))
    }

    #[inline]
    pub fn for_turn(&self, delta: usize) -> f64 {
        self.0[delta]
    }
}

/// `W(sigma) = (1 + sigma / (1 + gamma*sigma))^beta`.
#[inline]
pub fn weight_pheromone(sigma: f64, beta: f64, gamma: f64) -> f64 {
    pow_half_integer(1.0 + sigma / (1.0 + gamma * sigma), beta)
}

/// `base^exp` for `base >= 1`, using `powi`/`sqrt` when `2*exp` is a small integer.
#[inline]
fn pow_half_integer(base: f64, exp: f64) -> f64 {
    let twice = exp * 2.0;
    if twice == twice.trunc() && twice.abs() <= 64.0 {
        let whole = base.powi(exp.trunc() as i32);
        if twice as i64 % 2 == 0 {
            whole
        } else if exp > 0.0 {
            whole * base.sqrt()
        } else {
            whole / base.sqrt()
        }
    } else {
        base.powf(exp)
    }
}

/// Circular distance between two compass directions, in `0..=4`.
#[inline]
pub fn delta_index(from: Heading, to_direction: usize) -> usize {
    let diff = (from.index() as isize - to_direction as isize).unsigned_abs() % 8;
    diff.min(8 - diff)
}

/// Unnormalized move scores per direction and their total; `None` when every
/// neighbour holds an agent.
pub(crate) fn move_scores(
    grid: &Grid,
    pos: Pos,
    heading: Heading,
    cfg: &SimConfig,
    weights: &DirectionWeights,
) -> Option<([f64; 8], f64)> {
    let mut scores = [0.0; 8];
    let mut total = 0.0;
    for (dir, n) in grid.neighbors8(pos).into_iter().enumerate() {
        if grid.agent_at(n).is_some() {
            continue;
        }
        let s = weight_pheromone(grid.pheromone_at(n), cfg.beta, cfg.gamma)
            * weights.for_turn(delta_index(heading, dir));
        scores[dir] = s;
        total += s;
    }
    (total > 0.0).then_some((scores, total))
}

/// Normalized transition probabilities to the 8 neighbours, or `None`
/// (stay put) when no neighbour is admissible.
pub fn transition_probabilities(
    grid: &Grid,
    pos: Pos,
    heading: Heading,
    cfg: &SimConfig,
    weights: &DirectionWeights,
) -> Option<[f64; 8]> {
    move_scores(grid, pos, heading, cfg, weights).map(|(scores, total)| scores.map(|s| s / total))
}

/// Draws a direction from unnormalized scores with a single uniform variate.
pub(crate) fn sample_direction<R: Rng + ?Sized>(scores: &[f64; 8], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (dir, &s) in scores.iter().enumerate() {
        if s <= 0.0 {
            continue;
        }
        acc += s;
        last = dir;
        if target < acc {
            return dir;
        }
    }
    last
}

/// Adds `eta + p_dep * n_items` at `pos` and returns the new level.
pub fn deposit(grid: &mut Grid, pos: Pos, n_items: usize, cfg: &SimConfig) -> f64 {
    let level = grid.pheromone_at(pos) + deposit_amount(n_items, cfg);
    grid.set_pheromone(pos, level);
    level
}

#[inline]
pub fn deposit_amount(n_items: usize, cfg: &SimConfig) -> f64 {
    cfg.eta + cfg.p_dep * n_items as f64
}

/// Multiplicative decay `sigma <- sigma * (1 - k_evap)` over every cell.
pub fn evaporate(grid: &mut Grid, k_evap: f64) {
    let keep = 1.0 - k_evap;
    for s in grid.pheromone_mut() {
        *s *= keep;
    }
}
