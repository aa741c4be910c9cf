//! Synthetic benchmark data and experiment sizing.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianCluster {
    pub label: String,
    pub mean_x: f64,
    pub mean_y: f64,
    pub stddev: f64,
    pub count: usize,
}

/// Isotropic 2-D Gaussian clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    clusters: Vec<GaussianCluster>,
}

impl GaussianSpec {
    pub fn new(clusters: Vec<GaussianCluster>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::Config("at least one cluster is required".into()));
        }
        for c in &clusters {
            if c.count == 0 {
                return Err(Error::Config(format!("cluster {} has no points", c.label)));
            }
            if !(c.stddev > 0.0 && c.stddev.is_finite()) {
                return Err(Error::Config(format!(
                    "cluster {} needs a positive stddev",
                    c.label
                )));
            }
            if !(c.mean_x.is_finite() && c.mean_y.is_finite()) {
                return Err(Error::Config(format!(
                    "cluster {} has a non-finite mean",
                    c.label
                )));
            }
        }
        Ok(GaussianSpec { clusters })
    }

    /// Four classes of 200 points, stddev 0.1, centred at the corners of
    /// `[0.2, 0.8]^2`: A (0.2, 0.2), B (0.8, 0.2), C (0.8, 0.8), D (0.2, 0.8).
    pub fn four_corners() -> Self {
        Self::four_corners_with(200)
    }

    pub fn four_corners_with(per_class: usize) -> Self {
        let centres = [("A", 0.2, 0.2), ("B", 0.8, 0.2), ("C", 0.8, 0.8), ("D", 0.2, 0.8)];
        GaussianSpec::new(
            centres
                .iter()
                .map(|&(label, mean_x, mean_y)| GaussianCluster {
                    label: label.to_string(),
                    mean_x,
                    mean_y,
                    stddev: 0.1,
                    count: per_class,
                })
                .collect(),
        )
        .expect("static spec is valid")
    }

    pub fn clusters(&self) -> &[GaussianCluster] {
        &self.clusters
    }

    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.count).sum()
    }
}

/// Samples the spec cluster by cluster, x then y for every point. Values are
/// not clipped.
pub fn generate_gaussian<R: Rng + ?Sized>(spec: &GaussianSpec, rng: &mut R) -> Dataset {
    let mut rows = Vec::with_capacity(spec.total());
    let mut labels = Vec::with_capacity(spec.total());
    for c in spec.clusters() {
        let nx = Normal::new(c.mean_x, c.stddev).expect("validated stddev");
        let ny = Normal::new(c.mean_y, c.stddev).expect("validated stddev");
        for _ in 0..c.count {
            let x = nx.sample(rng);
            let y = ny.sample(rng);
            rows.push(vec![x, y]);
            labels.push(c.label.clone());
        }
    }
    Dataset::from_rows(rows, Some(labels)).expect("generated rows are consistent")
}

/// High-dimensional stand-in data: `n_classes` centres drawn uniformly from
/// the unit cube in `dim` dimensions, items assigned round-robin and spread
/// with the given stddev. Labels are `K00`, `K01`, ...
pub fn generate_blobs<R: Rng + ?Sized>(
    n_items: usize,
    dim: usize,
    n_classes: usize,
    stddev: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if n_items == 0 || dim == 0 || n_classes == 0 {
        return Err(Error::Config("blob sizes must be positive".into()));
    }
    if !(stddev > 0.0 && stddev.is_finite()) {
        return Err(Error::Config("blob stddev must be positive".into()));
    }
    let centres: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let noise = Normal::new(0.0, stddev).expect("validated stddev");
    let width = format!("{}", n_classes.saturating_sub(1)).len().max(2);
    let mut rows = Vec::with_capacity(n_items);
    let mut labels = Vec::with_capacity(n_items);
    for i in 0..n_items {
        let k = i % n_classes;
        rows.push(centres[k].iter().map(|m| m + noise.sample(rng)).collect());
        labels.push(format!("K{k:0width$}"));
    }
    Dataset::from_rows(rows, Some(labels))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSize {
    pub grid_side: usize,
    pub n_agents: usize,
}

/// Grid area of four cells per item and one agent per 40 cells; the side is
/// at least 3 and there is at least one agent.
pub fn size_experiment(n_items: usize) -> ExperimentSize {
    let side = ((4.0 * n_items as f64).sqrt().round() as usize).max(3);
    let agents = (((side * side) as f64 / 40.0).round() as usize).max(1);
    ExperimentSize {
        grid_side: side,
        n_agents: agents,
    }
}
