//! Spatial entropy and cluster extraction.
//!
//! The entropy of a class is the fraction of Moore neighbours around its
//! items that are empty or hold an item of another class, averaged over the
//! class: 1 when every item is isolated, 0 for an infinite solid block.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::engine::{Observer, SimState};
use crate::error::{Error, Result};
use crate::grid::{Grid, Pos, OFFSETS};

const E_MAX: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub t: u64,
    pub per_class: BTreeMap<String, f64>,
    pub total: f64,
}

/// How items carried by agents count while a run is in progress.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CarriedPolicy {
    /// Carried items are left out of the class count.
    #[default]
    Exclude,
    /// Carried items count as fully isolated members of their class.
    Isolated,
}

/// Per-class `(sum of e_i, item count)` over resident items.
fn class_tallies(grid: &Grid, dataset: &Dataset) -> Vec<(f64, usize)> {
    let mut tallies = vec![(0.0, 0usize); dataset.classes().len()];
    for (idx, slot) in grid.item_slots().iter().enumerate() {
        let Some(id) = *slot else { continue };
        let class = dataset.class_index(id);
        let pos = grid.pos(idx);
        let same = grid
            .neighbors8(pos)
            .iter()
            .filter(|n| grid.item_at(**n).is_some_and(|o| dataset.class_index(o) == class))
            .count();
        let t = &mut tallies[class];
        t.0 += (8 - same) as f64;
        t.1 += 1;
    }
    tallies
}

/// Entropy of one class over the items resident on the grid.
pub fn class_entropy(grid: &Grid, dataset: &Dataset, label: &str) -> Result<f64> {
    let class = dataset
        .classes()
        .iter()
        .position(|c| c == label)
        .ok_or_else(|| Error::UndefinedLabel(label.to_string()))?;
    let (sum, n) = class_tallies(grid, dataset)[class];
    if n == 0 {
        return Err(Error::UndefinedLabel(label.to_string()));
    }
    Ok(sum / (n as f64 * E_MAX))
}

/// Sum of the class entropies. A class with no resident item counts as 1.
pub fn total_entropy(grid: &Grid, dataset: &Dataset, t: u64) -> EntropyRecord {
    record_from(class_tallies(grid, dataset), dataset, t)
}

/// Entropy record of a live state under the given policy for carried items.
pub fn state_entropy(state: &SimState, policy: CarriedPolicy) -> EntropyRecord {
    let dataset = state.dataset();
    let mut tallies = class_tallies(state.grid(), dataset);
    if policy == CarriedPolicy::Isolated {
        for id in state.agents().iter().filter_map(|a| a.carried) {
            let t = &mut tallies[dataset.class_index(id)];
            t.0 += E_MAX;
            t.1 += 1;
        }
    }
    record_from(tallies, dataset, state.t())
}

fn record_from(tallies: Vec<(f64, usize)>, dataset: &Dataset, t: u64) -> EntropyRecord {
    let per_class: BTreeMap<String, f64> = dataset
        .classes()
        .iter()
        .zip(tallies)
        .map(|(c, (sum, n))| {
            let e = if n == 0 { 1.0 } else { sum / (n as f64 * E_MAX) };
            (c.clone(), e)
        })
        .collect();
    let total = per_class.values().sum();
    EntropyRecord { t, per_class, total }
}

/// Records entropy every `interval` steps and at `t_max`.
#[derive(Clone, Debug)]
pub struct EntropyRecorder {
    interval: u64,
    t_max: u64,
    policy: CarriedPolicy,
    pub records: Vec<EntropyRecord>,
}

impl EntropyRecorder {
    pub fn new(interval: u64, t_max: u64, policy: CarriedPolicy) -> Self {
        EntropyRecorder {
            interval: interval.max(1),
            t_max,
            policy,
            records: Vec::new(),
        }
    }
}

impl Observer for EntropyRecorder {
    fn wants(&self, t: u64) -> bool {
        t.is_multiple_of(self.interval) || t == self.t_max
    }

    fn observe(&mut self, _t: u64, state: &SimState) {
        self.records.push(state_entropy(state, self.policy));
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Item ids, ascending.
    pub members: Vec<u32>,
    pub majority_label: String,
    pub purity: f64,
    pub size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Vec<Cluster>,
    pub n_clusters: usize,
}

impl ClusterReport {
    /// Unweighted mean purity over clusters with at least `min_size` members.
    pub fn mean_purity(&self, min_size: usize) -> Option<f64> {
        let big: Vec<f64> = self
            .clusters
            .iter()
            .filter(|c| c.size >= min_size)
            .map(|c| c.purity)
            .collect();
        (!big.is_empty()).then(|| big.iter().sum::<f64>() / big.len() as f64)
    }
}

/// Connected components of resident items on the torus, in row-major order
/// of their first cell.
pub fn extract_clusters(grid: &Grid, dataset: &Dataset, connectivity: Connectivity) -> ClusterReport {
    let offsets: Vec<(isize, isize)> = match connectivity {
        Connectivity::Eight => OFFSETS.to_vec(),
        Connectivity::Four => OFFSETS.iter().copied().filter(|(dx, dy)| dx * dy == 0).collect(),
    };
    let mut seen = vec![false; grid.n_cells()];
    let mut clusters = Vec::new();
    let mut queue: VecDeque<Pos> = VecDeque::new();
    for start in 0..grid.n_cells() {
        if seen[start] || grid.item_slots()[start].is_none() {
            continue;
        }
        seen[start] = true;
        queue.push_back(grid.pos(start));
        let mut members = Vec::new();
        while let Some(p) = queue.pop_front() {
            members.push(grid.item_at(p).expect("queued cells hold items"));
            for &(dx, dy) in &offsets {
                let q = grid.offset(p, dx, dy);
                let qi = grid.index(q);
                if !seen[qi] && grid.item_slots()[qi].is_some() {
                    seen[qi] = true;
                    queue.push_back(q);
                }
            }
        }
        members.sort_unstable();
        clusters.push(summarize(members, dataset));
    }
    ClusterReport {
        n_clusters: clusters.len(),
        clusters,
    }
}

fn summarize(members: Vec<u32>, dataset: &Dataset) -> Cluster {
    let mut counts = vec![0usize; dataset.classes().len()];
    for &id in &members {
        counts[dataset.class_index(id)] += 1;
    }
    // first maximum wins, i.e. the alphabetically smallest label on ties
    let (best, &count) = counts
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, c)| **c)
        .expect("at least one class");
    let size = members.len();
    Cluster {
        majority_label: dataset.classes()[best].clone(),
        purity: count as f64 / size as f64,
        size,
        members,
    }
}
