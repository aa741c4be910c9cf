//! End-to-end runs that load a dataset file, simulate, and write every output
//! plus a manifest sufficient to reproduce them byte for byte.

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::dataset::{load_dataset, Dataset, LoadOptions};
use crate::engine::{self, Observer, SimState};
use crate::error::{Error, Result};
use crate::export;
use crate::metrics::{self, CarriedPolicy, ClusterReport, Connectivity, EntropyRecord, EntropyRecorder};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub entropy_interval: u64,
    /// Steps after which a snapshot is written; steps beyond `t_max` are skipped.
    pub snapshot_steps: Vec<u64>,
    pub carried_policy: CarriedPolicy,
    pub connectivity: Connectivity,
    pub svg: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            entropy_interval: 1_000,
            snapshot_steps: vec![0, 1, 10_000, 100_000, 1_000_000],
            carried_policy: CarriedPolicy::Exclude,
            connectivity: Connectivity::Eight,
            svg: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSource {
    pub path: PathBuf,
    pub sha256: String,
    pub load: LoadOptions,
    pub n_items: usize,
    pub feature_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config: SimConfig,
    pub options: RunOptions,
    pub dataset: DatasetSource,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub entropy: Vec<EntropyRecord>,
    pub final_entropy: EntropyRecord,
    pub clusters: ClusterReport,
    pub drain_steps: u64,
    pub forced_placements: usize,
    pub final_state: SimState,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn snapshot_name(t: u64) -> String {
    format!("snapshot_t{t:07}")
}

struct Snapshots {
    steps: BTreeSet<u64>,
    svg: bool,
    files: Vec<(String, String)>,
}

impl Observer for Snapshots {
    fn wants(&self, t: u64) -> bool {
        self.steps.contains(&t)
    }

    fn observe(&mut self, t: u64, state: &SimState) {
        let name = snapshot_name(t);
        self.files.push((
            format!("{name}.ppm"),
            export::render_ppm(state.grid(), state.dataset(), true),
        ));
        if self.svg {
            self.files.push((
                format!("{name}.svg"),
                export::render_svg(state.grid(), state.dataset(), true),
            ));
        }
    }
}

/// Checks conservation and agent exclusion at a fixed interval.
pub struct InvariantChecker {
    pub interval: u64,
    pub checks: u64,
    pub violation: Option<String>,
}

impl InvariantChecker {
    pub fn new(interval: u64) -> Self {
        InvariantChecker {
            interval: interval.max(1),
            checks: 0,
            violation: None,
        }
    }
}

impl Observer for InvariantChecker {
    fn wants(&self, t: u64) -> bool {
        self.violation.is_none() && t.is_multiple_of(self.interval)
    }

    fn observe(&mut self, t: u64, state: &SimState) {
        self.checks += 1;
        if let Err(e) = state.check_invariants() {
            self.violation = Some(format!("t={t}: {e}"));
        }
    }

    fn finish(&mut self, state: &SimState) {
        self.checks += 1;
        if self.violation.is_none() {
            if let Err(e) = state.check_invariants() {
                self.violation = Some(format!("final: {e}"));
            }
        }
    }
}

/// Runs one experiment into `out_dir` and writes the manifest last.
pub fn run_experiment(
    cfg: &SimConfig,
    dataset_path: &Path,
    load: &LoadOptions,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<RunSummary> {
    cfg.validate()?;
    let bytes = fs::read(dataset_path).map_err(|e| Error::io(dataset_path, e))?;
    let dataset = load_dataset(BufReader::new(&bytes[..]), load)?;
    let source = DatasetSource {
        path: dataset_path.to_path_buf(),
        sha256: sha256_hex(&bytes),
        load: load.clone(),
        n_items: dataset.len(),
        feature_dim: dataset.feature_dim(),
    };
    run_loaded(cfg, Arc::new(dataset), source, options, out_dir)
}

/// Re-runs from a manifest; the dataset file must still match its digest.
pub fn rerun_from_manifest(manifest_path: &Path, out_dir: &Path) -> Result<RunSummary> {
    let m = RunManifest::read(manifest_path)?;
    let bytes = fs::read(&m.dataset.path).map_err(|e| Error::io(&m.dataset.path, e))?;
    let digest = sha256_hex(&bytes);
    if digest != m.dataset.sha256 {
        return Err(Error::Config(format!(
            "dataset {} changed: digest {digest} != {}",
            m.dataset.path.display(),
            m.dataset.sha256
        )));
    }
    let dataset = load_dataset(BufReader::new(&bytes[..]), &m.dataset.load)?;
    run_loaded(
        &m.config,
        Arc::new(dataset),
        m.dataset.clone(),
        &m.options,
        out_dir,
    )
}

fn run_loaded(
    cfg: &SimConfig,
    dataset: Arc<Dataset>,
    source: DatasetSource,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<RunSummary> {
    let mut entropy = EntropyRecorder::new(options.entropy_interval, cfg.t_max, options.carried_policy);
    let mut snaps = Snapshots {
        steps: options
            .snapshot_steps
            .iter()
            .copied()
            .filter(|t| *t <= cfg.t_max)
            .collect(),
        svg: options.svg,
        files: Vec::new(),
    };
    let mut checker = InvariantChecker::new(options.entropy_interval);
    let outcome = engine::run(
        cfg,
        dataset.clone(),
        &mut [&mut entropy, &mut snaps, &mut checker],
    )?;
    if let Some(v) = checker.violation {
        return Err(Error::Invariant(v));
    }

    let state = outcome.state;
    let final_entropy = metrics::total_entropy(state.grid(), &dataset, state.t());
    let clusters = metrics::extract_clusters(state.grid(), &dataset, options.connectivity);

    let mut files = snaps.files;
    files.push(("entropy.csv".into(), export::entropy_csv(&entropy.records)));
    files.push((
        "final.ppm".into(),
        export::render_ppm(state.grid(), &dataset, false),
    ));
    if options.svg {
        files.push((
            "final.svg".into(),
            export::render_svg(state.grid(), &dataset, false),
        ));
    }
    files.push((
        "clusters.txt".into(),
        export::cluster_listing(&clusters, &dataset, &final_entropy),
    ));
    files.push(("clusters.csv".into(), export::cluster_table(&clusters)));

    let mut outputs: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    outputs.push(MANIFEST_FILE.into());
    outputs.sort();
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        config: cfg.clone(),
        options: options.clone(),
        dataset: source,
        outputs,
    };

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (name, body) in &files {
        let p = out_dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    let p = out_dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&p, json).map_err(|e| Error::io(&p, e))?;

    Ok(RunSummary {
        manifest,
        entropy: entropy.records,
        final_entropy,
        clusters,
        drain_steps: outcome.drain_steps,
        forced_placements: outcome.forced_placements,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{generate_gaussian, GaussianSpec};
    use crate::dataset::write_dataset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_dataset(dir: &Path) -> PathBuf {
        let ds = generate_gaussian(
            &GaussianSpec::four_corners_with(15),
            &mut ChaCha8Rng::seed_from_u64(4),
        );
        let p = dir.join("data.csv");
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        fs::write(&p, buf).unwrap();
        p
    }

    fn labeled() -> LoadOptions {
        LoadOptions {
            labeled: true,
            ..Default::default()
        }
    }

    #[test]
    fn zero_step_run_has_one_entropy_row_and_initial_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_dataset(dir.path());
        let cfg = SimConfig {
            t_max: 0,
            grid_side: 12,
            n_agents: 4,
            ..Default::default()
        };
        let out = dir.path().join("out");
        let s = run_experiment(&cfg, &data, &labeled(), &RunOptions::default(), &out).unwrap();
        let csv = fs::read_to_string(out.join("entropy.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(s.entropy.len(), 1);
        let snap = fs::read_to_string(out.join("snapshot_t0000000.ppm")).unwrap();
        let init = SimState::new(cfg.clone(), s.final_state.dataset_arc()).unwrap();
        assert_eq!(snap, export::render_ppm(init.grid(), init.dataset(), true));
        for f in &s.manifest.outputs {
            assert!(out.join(f).exists(), "{f}");
        }
    }

    #[test]
    fn manifest_rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_dataset(dir.path());
        let cfg = SimConfig {
            t_max: 2_000,
            grid_side: 12,
            n_agents: 4,
            seed: 11,
            ..Default::default()
        };
        let opts = RunOptions {
            entropy_interval: 100,
            snapshot_steps: vec![1, 500],
            svg: true,
            ..Default::default()
        };
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let first = run_experiment(&cfg, &data, &labeled(), &opts, &a).unwrap();
        rerun_from_manifest(&a.join(MANIFEST_FILE), &b).unwrap();
        for f in &first.manifest.outputs {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn changed_dataset_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_dataset(dir.path());
        let cfg = SimConfig {
            t_max: 10,
            grid_side: 12,
            n_agents: 2,
            ..Default::default()
        };
        let a = dir.path().join("a");
        run_experiment(&cfg, &data, &labeled(), &RunOptions::default(), &a).unwrap();
        fs::write(&data, "0,0,A\n1,1,B\n").unwrap();
        assert!(matches!(
            rerun_from_manifest(&a.join(MANIFEST_FILE), &dir.path().join("b")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
