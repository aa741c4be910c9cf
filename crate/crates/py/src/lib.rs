//! Python bindings: datasets, configuration, step-wise simulation, full
//! experiment runs, metrics, the response-threshold functions and the
//! benchmark generators.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use acluster::benchmark::{self, GaussianCluster, GaussianSpec};
use acluster::experiment::{self, RunOptions};
use acluster::metrics::{self, EntropyRecorder};
use acluster::{behavior, export, pheromone};
use acluster::{
    CarriedPolicy, Connectivity, Error, FunctionType, LoadOptions, Schedule, SimState, SubAssignment,
};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Invariant(_) | Error::Misuse(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn function_type(n: u8) -> PyResult<FunctionType> {
    FunctionType::from_number(n).ok_or_else(|| PyValueError::new_err(format!("unknown function type {n}")))
}

fn carried_policy(name: &str) -> PyResult<CarriedPolicy> {
    match name {
        "exclude" => Ok(CarriedPolicy::Exclude),
        "isolated" => Ok(CarriedPolicy::Isolated),
        _ => Err(PyValueError::new_err("carried policy is 'exclude' or 'isolated'")),
    }
}

fn connectivity(n: u8) -> PyResult<Connectivity> {
    match n {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        _ => Err(PyValueError::new_err("connectivity is 4 or 8")),
    }
}

#[pyclass(name = "Dataset", module = "acluster", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: Arc<acluster::Dataset>,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (rows, labels=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let inner = acluster::Dataset::from_rows(rows, labels).map_err(to_py)?;
        Ok(PyDataset {
            inner: Arc::new(inner),
        })
    }

    /// Reads a delimited file; a trailing label column needs `labeled=True`.
    #[staticmethod]
    #[pyo3(signature = (path, labeled=false, header=false, delimiter=None))]
    fn load(path: PathBuf, labeled: bool, header: bool, delimiter: Option<char>) -> PyResult<Self> {
        let opts = LoadOptions {
            delimiter,
            labeled,
            header,
        };
        let inner = acluster::load_dataset_file(path, &opts).map_err(to_py)?;
        Ok(PyDataset {
            inner: Arc::new(inner),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        acluster::dataset::write_dataset(&self.inner, &mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn d_max(&self) -> f64 {
        self.inner.d_max()
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<Option<String>> {
        self.inner.items().iter().map(|i| i.label.clone()).collect()
    }

    fn features(&self, id: u32) -> PyResult<Vec<f64>> {
        self.check(id)?;
        Ok(self.inner.item(id).features.clone())
    }

    /// Normalized distance between two items.
    fn distance(&self, a: u32, b: u32) -> PyResult<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.inner.distance(a, b))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(items={}, features={}, classes={})",
            self.inner.len(),
            self.inner.feature_dim(),
            self.inner.classes().len()
        )
    }
}

impl PyDataset {
    fn check(&self, id: u32) -> PyResult<()> {
        if (id as usize) < self.inner.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("no item {id}")))
        }
    }
}

#[pyclass(name = "SimConfig", module = "acluster", skip_from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    inner: acluster::SimConfig,
}

impl PySimConfig {
    fn set_field(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let c = &mut self.inner;
        match key {
            "k1" => c.k1 = value.extract()?,
            "k2" => c.k2 = value.extract()?,
            "beta" => c.beta = value.extract()?,
            "gamma" => c.gamma = value.extract()?,
            "eta" => c.eta = value.extract()?,
            "k_evap" => c.k_evap = value.extract()?,
            "p_dep" => c.p_dep = value.extract()?,
            "theta_count" => c.theta_count = value.extract()?,
            "steepness" => c.steepness = value.extract()?,
            "t_max" => c.t_max = value.extract()?,
            "lf_alpha" => c.lf_alpha = value.extract()?,
            "lf_s" => c.lf_s = value.extract()?,
            "grid_side" => c.grid_side = value.extract()?,
            "n_agents" => c.n_agents = value.extract()?,
            "seed" => c.seed = value.extract()?,
            "drain_cap" => c.drain_cap = value.extract()?,
            "function_type" => c.function_type = function_type(value.extract()?)?,
            "schedule" => {
                c.schedule = match value.extract::<String>()?.as_str() {
                    "fixed" => Schedule::Fixed,
                    "shuffled" => Schedule::Shuffled,
                    _ => return Err(PyValueError::new_err("schedule is 'fixed' or 'shuffled'")),
                }
            }
            _ => return Err(PyValueError::new_err(format!("unknown config field {key:?}"))),
        }
        Ok(())
    }
}

#[pymethods]
impl PySimConfig {
    /// Defaults overridden by keyword arguments named like the fields;
    /// `function_type` is 1 to 4 and `schedule` is "fixed" or "shuffled".
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut cfg = PySimConfig {
            inner: acluster::SimConfig::default(),
        };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                cfg.set_field(&k.extract::<String>()?, &v)?;
            }
        }
        Ok(cfg)
    }

    #[pyo3(signature = (**kwargs))]
    fn replace(&self, kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut cfg = self.clone();
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                cfg.set_field(&k.extract::<String>()?, &v)?;
            }
        }
        Ok(cfg)
    }

    fn __setattr__(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.set_field(key, value)
    }

    #[getter]
    fn k1(&self) -> f64 {
        self.inner.k1
    }

    #[getter]
    fn k2(&self) -> f64 {
        self.inner.k2
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn k_evap(&self) -> f64 {
        self.inner.k_evap
    }

    #[getter]
    fn p_dep(&self) -> f64 {
        self.inner.p_dep
    }

    #[getter]
    fn theta_count(&self) -> f64 {
        self.inner.theta_count
    }

    #[getter]
    fn steepness(&self) -> f64 {
        self.inner.steepness
    }

    #[getter]
    fn t_max(&self) -> u64 {
        self.inner.t_max
    }

    #[getter]
    fn lf_alpha(&self) -> f64 {
        self.inner.lf_alpha
    }

    #[getter]
    fn lf_s(&self) -> usize {
        self.inner.lf_s
    }

    #[getter]
    fn grid_side(&self) -> usize {
        self.inner.grid_side
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn drain_cap(&self) -> u64 {
        self.inner.drain_cap
    }

    #[getter]
    fn function_type(&self) -> u8 {
        self.inner.function_type.number()
    }

    #[getter]
    fn schedule(&self) -> &'static str {
        match self.inner.schedule {
            Schedule::Fixed => "fixed",
            Schedule::Shuffled => "shuffled",
        }
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySimConfig { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "SimConfig(type={}, grid_side={}, n_agents={}, t_max={}, seed={})",
            self.inner.function_type.number(),
            self.inner.grid_side,
            self.inner.n_agents,
            self.inner.t_max,
            self.inner.seed
        )
    }
}

#[pyclass(name = "Cluster", module = "acluster", frozen, get_all)]
struct PyCluster {
    members: Vec<u32>,
    majority_label: String,
    purity: f64,
    size: usize,
}

#[pymethods]
impl PyCluster {
    fn __repr__(&self) -> String {
        format!(
            "Cluster(size={}, majority={:?}, purity={:.3})",
            self.size, self.majority_label, self.purity
        )
    }
}

fn clusters_of(report: metrics::ClusterReport) -> Vec<PyCluster> {
    report
        .clusters
        .into_iter()
        .map(|c| PyCluster {
            members: c.members,
            majority_label: c.majority_label,
            purity: c.purity,
            size: c.size,
        })
        .collect()
}

/// A simulation advanced step by step from Python.
#[pyclass(name = "Simulation", module = "acluster")]
struct PySimulation {
    state: SimState,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(config: &PySimConfig, dataset: &PyDataset) -> PyResult<Self> {
        let state = SimState::new(config.inner.clone(), dataset.inner.clone()).map_err(to_py)?;
        Ok(PySimulation { state })
    }

    #[pyo3(signature = (steps=1))]
    fn step(&mut self, py: Python<'_>, steps: u64) {
        let state = &mut self.state;
        py.detach(|| {
            for _ in 0..steps {
                state.step();
            }
        });
    }

    /// Runs the remaining steps up to `t_max` and the drain phase; returns
    /// `(drain_steps, forced_placements)`.
    fn finish(&mut self, py: Python<'_>) -> PyResult<(u64, usize)> {
        let state = self.state.clone();
        let outcome = py.detach(|| acluster::run_from(state, &mut [])).map_err(to_py)?;
        self.state = outcome.state;
        Ok((outcome.drain_steps, outcome.forced_placements))
    }

    #[getter]
    fn t(&self) -> u64 {
        self.state.t()
    }

    #[getter]
    fn laden_agents(&self) -> usize {
        self.state.laden_agents()
    }

    #[getter]
    fn config(&self) -> PySimConfig {
        PySimConfig {
            inner: self.state.config().clone(),
        }
    }

    /// `(x, y, heading, carried item or None)` per agent.
    fn agents(&self) -> Vec<(usize, usize, usize, Option<u32>)> {
        self.state
            .agents()
            .iter()
            .map(|a| (a.pos.x, a.pos.y, a.heading.index(), a.carried))
            .collect()
    }

    /// Item id per cell, row by row.
    fn items(&self) -> Vec<Vec<Option<u32>>> {
        let side = self.state.grid().side();
        self.state
            .grid()
            .item_slots()
            .chunks(side)
            .map(<[_]>::to_vec)
            .collect()
    }

    fn pheromone(&self) -> Vec<Vec<f64>> {
        let side = self.state.grid().side();
        self.state
            .grid()
            .pheromone()
            .chunks(side)
            .map(<[_]>::to_vec)
            .collect()
    }

    /// `(E_total, {class: E})`.
    #[pyo3(signature = (carried="exclude"))]
    fn entropy(&self, carried: &str) -> PyResult<(f64, BTreeMap<String, f64>)> {
        let r = metrics::state_entropy(&self.state, carried_policy(carried)?);
        Ok((r.total, r.per_class))
    }

    fn class_entropy(&self, label: &str) -> PyResult<f64> {
        metrics::class_entropy(self.state.grid(), self.state.dataset(), label).map_err(to_py)
    }

    #[pyo3(signature = (connectivity=8))]
    fn clusters(&self, connectivity: u8) -> PyResult<Vec<PyCluster>> {
        let c = self::connectivity(connectivity)?;
        Ok(clusters_of(metrics::extract_clusters(
            self.state.grid(),
            self.state.dataset(),
            c,
        )))
    }

    #[pyo3(signature = (show_agents=true))]
    fn ppm(&self, show_agents: bool) -> String {
        export::render_ppm(self.state.grid(), self.state.dataset(), show_agents)
    }

    #[pyo3(signature = (show_agents=true))]
    fn svg(&self, show_agents: bool) -> String {
        export::render_svg(self.state.grid(), self.state.dataset(), show_agents)
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.state.check_invariants().map_err(to_py)
    }
}

/// Result of a complete run.
#[pyclass(name = "RunResult", module = "acluster", frozen, get_all)]
struct PyRunResult {
    entropy: Vec<(u64, f64)>,
    final_entropy: f64,
    final_per_class: BTreeMap<String, f64>,
    clusters: Vec<Py<PyCluster>>,
    drain_steps: u64,
    forced_placements: usize,
    listing: String,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(final_entropy={:.4}, clusters={}, drain_steps={})",
            self.final_entropy,
            self.clusters.len(),
            self.drain_steps
        )
    }
}

fn run_result(
    py: Python<'_>,
    entropy: Vec<(u64, f64)>,
    state: &SimState,
    drain_steps: u64,
    forced_placements: usize,
    connectivity: Connectivity,
) -> PyResult<PyRunResult> {
    let fin = metrics::total_entropy(state.grid(), state.dataset(), state.t());
    let report = metrics::extract_clusters(state.grid(), state.dataset(), connectivity);
    let listing = export::cluster_listing(&report, state.dataset(), &fin);
    let clusters = clusters_of(report)
        .into_iter()
        .map(|c| Py::new(py, c))
        .collect::<PyResult<_>>()?;
    Ok(PyRunResult {
        entropy,
        final_entropy: fin.total,
        final_per_class: fin.per_class,
        clusters,
        drain_steps,
        forced_placements,
        listing,
    })
}

/// Runs a simulation in memory, recording E_total every `entropy_interval` steps.
#[pyfunction]
#[pyo3(signature = (config, dataset, entropy_interval=1000, carried="exclude", connectivity=8))]
fn run(
    py: Python<'_>,
    config: &PySimConfig,
    dataset: &PyDataset,
    entropy_interval: u64,
    carried: &str,
    connectivity: u8,
) -> PyResult<PyRunResult> {
    let cfg = config.inner.clone();
    let ds = dataset.inner.clone();
    let mut rec = EntropyRecorder::new(entropy_interval, cfg.t_max, carried_policy(carried)?);
    let conn = self::connectivity(connectivity)?;
    let outcome = py
        .detach(|| acluster::run(&cfg, ds, &mut [&mut rec]))
        .map_err(to_py)?;
    let series = rec.records.iter().map(|r| (r.t, r.total)).collect();
    run_result(
        py,
        series,
        &outcome.state,
        outcome.drain_steps,
        outcome.forced_placements,
        conn,
    )
}

/// Runs an experiment from a dataset file into `out_dir`, writing every
/// output and a manifest; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (config, dataset_path, out_dir, labeled=true, entropy_interval=1000, snapshot_steps=None, svg=false))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    config: &PySimConfig,
    dataset_path: PathBuf,
    out_dir: PathBuf,
    labeled: bool,
    entropy_interval: u64,
    snapshot_steps: Option<Vec<u64>>,
    svg: bool,
) -> PyResult<PathBuf> {
    let mut options = RunOptions {
        entropy_interval,
        svg,
        ..Default::default()
    };
    if let Some(s) = snapshot_steps {
        options.snapshot_steps = s;
    }
    let load = LoadOptions {
        labeled,
        ..Default::default()
    };
    let cfg = config.inner.clone();
    py.detach(|| experiment::run_experiment(&cfg, &dataset_path, &load, &options, &out_dir))
        .map_err(to_py)?;
    Ok(out_dir.join(experiment::MANIFEST_FILE))
}

/// Re-runs the experiment a manifest describes into `out_dir`.
#[pyfunction]
fn rerun_manifest(py: Python<'_>, manifest: PathBuf, out_dir: PathBuf) -> PyResult<PathBuf> {
    py.detach(|| experiment::rerun_from_manifest(&manifest, &out_dir))
        .map_err(to_py)?;
    Ok(out_dir.join(experiment::MANIFEST_FILE))
}

#[pyfunction]
fn weight_pheromone(sigma: f64, beta: f64, gamma: f64) -> f64 {
    pheromone::weight_pheromone(sigma, beta, gamma)
}

#[pyfunction]
#[pyo3(signature = (n_items, theta_count=5.0, steepness=2.0))]
fn chi(n_items: usize, theta_count: f64, steepness: f64) -> f64 {
    behavior::chi(n_items, theta_count, steepness)
}

#[pyfunction]
#[pyo3(signature = (d, k1=0.1))]
fn delta_drop(d: f64, k1: f64) -> f64 {
    behavior::delta_drop(d, k1)
}

#[pyfunction]
#[pyo3(signature = (d, k2=0.3))]
fn epsilon_pick(d: f64, k2: f64) -> f64 {
    behavior::epsilon_pick(d, k2)
}

/// `(P_pick, P_drop)` for types 1 to 3; `sub` is "a" or "b".
#[pyfunction]
fn compose_probabilities(
    function_type: u8,
    sub: &str,
    chi: f64,
    eps: f64,
    delta: f64,
) -> PyResult<(f64, f64)> {
    let sub = match sub {
        "a" | "A" => SubAssignment::A,
        "b" | "B" => SubAssignment::B,
        _ => return Err(PyValueError::new_err("sub is 'a' or 'b'")),
    };
    behavior::compose_probabilities(self::function_type(function_type)?, sub, chi, eps, delta).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (f, k1=0.1, k2=0.3))]
fn lf_probabilities(f: f64, k1: f64, k2: f64) -> (f64, f64) {
    behavior::lf_probabilities(f, k1, k2)
}

#[pyfunction]
#[pyo3(signature = (f, k1=0.1, k2=0.3))]
fn bm_probabilities(f: f64, k1: f64, k2: f64) -> (f64, f64) {
    behavior::bm_probabilities(f, k1, k2)
}

type ClusterTuple = (String, f64, f64, f64, usize);

/// Gaussian clusters given as `(label, mean_x, mean_y, stddev, count)`;
/// without `clusters`, four classes of `per_class` points at the corners.
#[pyfunction]
#[pyo3(signature = (seed=0, clusters=None, per_class=200))]
fn generate_gaussian(
    seed: u64,
    clusters: Option<Vec<ClusterTuple>>,
    per_class: usize,
) -> PyResult<PyDataset> {
    let spec = match clusters {
        None => GaussianSpec::four_corners_with(per_class),
        Some(cs) => GaussianSpec::new(
            cs.into_iter()
                .map(|(label, mean_x, mean_y, stddev, count)| GaussianCluster {
                    label,
                    mean_x,
                    mean_y,
                    stddev,
                    count,
                })
                .collect(),
        )
        .map_err(to_py)?,
    };
    let ds = benchmark::generate_gaussian(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
    Ok(PyDataset { inner: Arc::new(ds) })
}

#[pyfunction]
#[pyo3(signature = (n_items, dim, n_classes, stddev, seed=0))]
fn generate_blobs(
    n_items: usize,
    dim: usize,
    n_classes: usize,
    stddev: f64,
    seed: u64,
) -> PyResult<PyDataset> {
    let ds = benchmark::generate_blobs(
        n_items,
        dim,
        n_classes,
        stddev,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
    .map_err(to_py)?;
    Ok(PyDataset { inner: Arc::new(ds) })
}

/// `(grid_side, n_agents)` for a dataset of `n_items`.
#[pyfunction]
fn size_experiment(n_items: usize) -> (usize, usize) {
    let s = benchmark::size_experiment(n_items);
    (s.grid_side, s.n_agents)
}

#[pymodule]
#[pyo3(name = "acluster")]
fn acluster_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySimConfig>()?;
    m.add_class::<PySimulation>()?;
    m.add_class::<PyCluster>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(rerun_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(weight_pheromone, m)?)?;
    m.add_function(wrap_pyfunction!(chi, m)?)?;
    m.add_function(wrap_pyfunction!(delta_drop, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_pick, m)?)?;
    m.add_function(wrap_pyfunction!(compose_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(lf_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(bm_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(generate_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(generate_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(size_experiment, m)?)?;
    Ok(())
}
