use std::fs;
use std::path::{Path, PathBuf};

use acluster::benchmark::size_experiment;
use acluster::experiment::{rerun_from_manifest, run_experiment, RunOptions, RunSummary};
use acluster::{
    load_dataset_file, CarriedPolicy, Connectivity, FunctionType, LoadOptions, Schedule, SimConfig,
};
use clap::{Args, ValueEnum};

use crate::CliError;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Labels {
    /// Labeled when the last field of the first record is not a number.
    Auto,
    Yes,
    No,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Carried {
    Exclude,
    Isolated,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Neighbours {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Dataset file: numeric feature columns with an optional trailing label.
    #[arg(required_unless_present = "manifest", conflicts_with = "manifest")]
    dataset: Option<PathBuf>,
    /// Re-run exactly what an earlier manifest describes.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = crate::OUT_DIR_ENV, default_value = crate::DEFAULT_OUT_DIR)]
    out: PathBuf,

    /// Probability function type, 1 to 4 (4 is the classic density-based baseline).
    #[arg(long = "type", value_name = "N", value_parser = parse_type)]
    function_type: Option<FunctionType>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Base pheromone deposit per step.
    #[arg(long)]
    eta: Option<f64>,
    /// Evaporation rate per step.
    #[arg(long)]
    k_evap: Option<f64>,
    /// Extra deposit per neighbouring item.
    #[arg(long)]
    p_dep: Option<f64>,
    /// Item-count response threshold.
    #[arg(long)]
    theta: Option<f64>,
    /// Steepness of the item-count response.
    #[arg(long)]
    steepness: Option<f64>,
    #[arg(long)]
    tmax: Option<u64>,
    #[arg(long)]
    lf_alpha: Option<f64>,
    /// Side of the density window for type 4 (odd).
    #[arg(long)]
    lf_s: Option<usize>,
    #[arg(long, conflicts_with = "auto_size")]
    side: Option<usize>,
    #[arg(long, conflicts_with = "auto_size")]
    agents: Option<usize>,
    /// Four cells per item and one agent per 40 cells.
    #[arg(long)]
    auto_size: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra steps allowed for laden agents to drop after the run.
    #[arg(long)]
    drain_cap: Option<u64>,
    /// Visit agents in a fresh random order every step.
    #[arg(long)]
    shuffle: bool,

    /// Steps between entropy records.
    #[arg(long, default_value_t = 1_000)]
    entropy_interval: u64,
    /// Snapshot steps, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 10_000, 100_000, 1_000_000])]
    snapshot_at: Vec<u64>,
    /// Also write SVG snapshots.
    #[arg(long)]
    svg: bool,
    /// How carried items count in mid-run entropy.
    #[arg(long, value_enum, default_value_t = Carried::Exclude)]
    carried: Carried,
    /// Cluster connectivity.
    #[arg(long, value_enum, default_value_t = Neighbours::Eight)]
    connectivity: Neighbours,

    #[arg(long, value_enum, default_value_t = Labels::Auto)]
    labels: Labels,
    /// Skip the first record.
    #[arg(long)]
    header: bool,
    /// Field separator; tab or comma is detected when omitted.
    #[arg(long)]
    delimiter: Option<char>,
}

fn parse_type(s: &str) -> Result<FunctionType, String> {
    s.parse().map_err(|e: acluster::Error| e.to_string())
}

/// Whether the last field of the first record fails to parse as a number.
fn sniff_labels(path: &Path, header: bool, delimiter: Option<char>) -> Result<bool, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut records = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    if header {
        records.next();
    }
    let Some(first) = records.next() else {
        return Ok(false);
    };
    let sep = delimiter.unwrap_or(if first.contains('\t') { '\t' } else { ',' });
    let last = first.split(sep).next_back().unwrap_or("").trim();
    Ok(last.parse::<f64>().is_err())
}

fn build_config(args: &RunArgs, n_items: usize) -> SimConfig {
    let mut cfg = SimConfig::default();
    macro_rules! set {
        ($($field:ident <- $arg:ident),* $(,)?) => {
            $(if let Some(v) = args.$arg { cfg.$field = v; })*
        };
    }
    set!(
        function_type <- function_type,
        k1 <- k1,
        k2 <- k2,
        beta <- beta,
        gamma <- gamma,
        eta <- eta,
        k_evap <- k_evap,
        p_dep <- p_dep,
        theta_count <- theta,
        steepness <- steepness,
        t_max <- tmax,
        lf_alpha <- lf_alpha,
        lf_s <- lf_s,
        grid_side <- side,
        n_agents <- agents,
        seed <- seed,
        drain_cap <- drain_cap,
    );
    if args.auto_size {
        let size = size_experiment(n_items);
        cfg.grid_side = size.grid_side;
        cfg.n_agents = size.n_agents;
    }
    if args.shuffle {
        cfg.schedule = Schedule::Shuffled;
    }
    cfg
}

fn print_summary(s: &RunSummary, out: &Path) {
    let e0 = s.entropy.first().map_or(f64::NAN, |r| r.total);
    println!("output: {}", out.display());
    println!(
        "type {} on {}x{} with {} agents, {} steps + {} drain",
        s.manifest.config.function_type,
        s.manifest.config.grid_side,
        s.manifest.config.grid_side,
        s.manifest.config.n_agents,
        s.manifest.config.t_max,
        s.drain_steps
    );
    println!("E_total: {e0:.6} -> {:.6}", s.final_entropy.total);
    match s.clusters.mean_purity(10) {
        Some(p) => println!(
            "clusters: {} (mean purity of size >= 10: {p:.4})",
            s.clusters.n_clusters
        ),
        None => println!("clusters: {}", s.clusters.n_clusters),
    }
    if s.forced_placements > 0 {
        println!("items placed after drain: {}", s.forced_placements);
    }
}

pub fn execute(args: RunArgs) -> Result<(), CliError> {
    let out = args.out.clone();
    if let Some(manifest) = &args.manifest {
        let summary = rerun_from_manifest(manifest, &out)?;
        print_summary(&summary, &out);
        return Ok(());
    }
    let dataset = args
        .dataset
        .as_ref()
        .expect("clap requires a dataset without --manifest");
    let labeled = match args.labels {
        Labels::Yes => true,
        Labels::No => false,
        Labels::Auto => sniff_labels(dataset, args.header, args.delimiter)?,
    };
    let load = LoadOptions {
        delimiter: args.delimiter,
        labeled,
        header: args.header,
    };
    let n_items = if args.auto_size {
        load_dataset_file(dataset, &load)?.len()
    } else {
        0
    };
    let cfg = build_config(&args, n_items);
    let options = RunOptions {
        entropy_interval: args.entropy_interval.max(1),
        snapshot_steps: args.snapshot_at.clone(),
        carried_policy: match args.carried {
            Carried::Exclude => CarriedPolicy::Exclude,
            Carried::Isolated => CarriedPolicy::Isolated,
        },
        connectivity: match args.connectivity {
            Neighbours::Four => Connectivity::Four,
            Neighbours::Eight => Connectivity::Eight,
        },
        svg: args.svg,
    };
    let summary = run_experiment(&cfg, dataset, &load, &options, &out)?;
    print_summary(&summary, &out);
    Ok(())
}
