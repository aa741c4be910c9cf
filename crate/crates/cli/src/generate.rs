use std::fs;
use std::path::PathBuf;

use acluster::benchmark::{generate_blobs, generate_gaussian, GaussianCluster, GaussianSpec};
use acluster::dataset::write_dataset;
use acluster::experiment::{sha256_hex, ARTIFACT_VERSION};
use clap::{ArgGroup, Args};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["four_corners", "clusters", "blobs"])))]
pub struct GenerateArgs {
    /// Four classes of 200 points, stddev 0.1, centred at (0.2|0.8, 0.2|0.8).
    #[arg(long)]
    four_corners: bool,
    /// Gaussian cluster `LABEL:mean_x,mean_y,stddev,count`; repeat the flag or
    /// separate clusters with `;`.
    #[arg(long, value_name = "LABEL:MX,MY,SD,COUNT")]
    clusters: Vec<String>,
    /// High-dimensional blobs `ITEMS:FEATURES:CLASSES:STDDEV`.
    #[arg(long, value_name = "N:F:K:SD")]
    blobs: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset file to write; the manifest goes to `<output>.manifest.json`.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Generator {
    Gaussian {
        clusters: Vec<GaussianCluster>,
    },
    Blobs {
        items: usize,
        features: usize,
        classes: usize,
        stddev: f64,
    },
}

#[derive(Serialize)]
struct GenerateManifest {
    artifact_version: &'static str,
    generator: Generator,
    seed: u64,
    output: PathBuf,
    sha256: String,
    n_items: usize,
}

fn parse_cluster(text: &str) -> Result<GaussianCluster, CliError> {
    let bad = || CliError::Usage(format!("cluster {text:?} is not LABEL:MX,MY,SD,COUNT"));
    let (label, rest) = text.split_once(':').ok_or_else(bad)?;
    let fields: Vec<&str> = rest.split(',').map(str::trim).collect();
    if label.trim().is_empty() || fields.len() != 4 {
        return Err(bad());
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    Ok(GaussianCluster {
        label: label.trim().to_string(),
        mean_x: num(fields[0])?,
        mean_y: num(fields[1])?,
        stddev: num(fields[2])?,
        count: fields[3].parse().map_err(|_| bad())?,
    })
}

fn parse_blobs(text: &str) -> Result<(usize, usize, usize, f64), CliError> {
    let bad = || CliError::Usage(format!("blobs {text:?} is not N:F:K:SD"));
    let f: Vec<&str> = text.split(':').map(str::trim).collect();
    if f.len() != 4 {
        return Err(bad());
    }
    Ok((
        f[0].parse().map_err(|_| bad())?,
        f[1].parse().map_err(|_| bad())?,
        f[2].parse().map_err(|_| bad())?,
        f[3].parse().map_err(|_| bad())?,
    ))
}

pub fn execute(args: GenerateArgs) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (dataset, generator) = if let Some(spec) = &args.blobs {
        let (items, features, classes, stddev) = parse_blobs(spec)?;
        let ds = generate_blobs(items, features, classes, stddev, &mut rng)?;
        (
            ds,
            Generator::Blobs {
                items,
                features,
                classes,
                stddev,
            },
        )
    } else {
        let spec = if args.four_corners {
            GaussianSpec::four_corners()
        } else {
            let clusters = args
                .clusters
                .iter()
                .flat_map(|c| c.split(';'))
                .filter(|c| !c.trim().is_empty())
                .map(parse_cluster)
                .collect::<Result<Vec<_>, _>>()?;
            GaussianSpec::new(clusters)?
        };
        let ds = generate_gaussian(&spec, &mut rng);
        (
            ds,
            Generator::Gaussian {
                clusters: spec.clusters().to_vec(),
            },
        )
    };

    let mut bytes = Vec::new();
    write_dataset(&dataset, &mut bytes).map_err(|e| CliError::io(&args.output, e))?;
    if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(&args.output, &bytes).map_err(|e| CliError::io(&args.output, e))?;

    let manifest = GenerateManifest {
        artifact_version: ARTIFACT_VERSION,
        generator,
        seed: args.seed,
        output: args.output.clone(),
        sha256: sha256_hex(&bytes),
        n_items: dataset.len(),
    };
    let mut name = args.output.clone().into_os_string();
    name.push(".manifest.json");
    let manifest_path = PathBuf::from(name);
    let mut json = serde_json::to_string_pretty(&manifest).map_err(acluster::Error::from)?;
    json.push('\n');
    fs::write(&manifest_path, json).map_err(|e| CliError::io(&manifest_path, e))?;
    println!("wrote {} items to {}", dataset.len(), args.output.display());
    Ok(())
}
