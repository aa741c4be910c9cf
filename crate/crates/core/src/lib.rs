//! Ant-based clustering of feature vectors on a toroidal grid.
//!
//! Agents wander a lattice guided by a pheromone field they lay themselves,
//! picking up items that look out of place and dropping them next to similar
//! ones. The decisions combine a response threshold on the number of nearby
//! items with thresholds on feature-space dissimilarity. The classic
//! density-based (LF) rules are available as a baseline, together with the spatial
//! entropy measure and cluster extraction used to evaluate a run.

pub mod behavior;
pub mod benchmark;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod export;
pub mod grid;
pub mod metrics;
pub mod pheromone;

pub use config::{FunctionType, Schedule, SimConfig, SubAssignment};
pub use dataset::{load_dataset, load_dataset_file, normalized_distance, Dataset, Item, LoadOptions};
pub use engine::{run, run_from, Agent, Observer, RunOutcome, SimState};
pub use error::{Error, Result};
pub use grid::{Cell, Grid, Pos};
pub use metrics::{CarriedPolicy, ClusterReport, Connectivity, EntropyRecord};
pub use pheromone::{DirectionWeights, Heading};
