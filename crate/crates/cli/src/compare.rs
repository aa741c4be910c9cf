use std::fs;
use std::path::{Path, PathBuf};

use acluster::export::{read_entropy_totals, Comparison};
use clap::Args;

use crate::{default_out_dir, CliError};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Entropy series written by `run` (at least two).
    #[arg(required = true, num_args = 2..)]
    series: Vec<PathBuf>,
    /// Column name per series, in order; defaults to the run directory name.
    #[arg(long = "name")]
    names: Vec<String>,
    /// Merged CSV destination; defaults to `merged.csv` in the output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn default_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem == "entropy" {
        if let Some(dir) = path.parent().and_then(Path::file_name) {
            return dir.to_string_lossy().into_owned();
        }
    }
    stem
}

pub fn execute(args: CompareArgs) -> Result<(), CliError> {
    if !args.names.is_empty() && args.names.len() != args.series.len() {
        return Err(CliError::Usage(format!(
            "{} names for {} series",
            args.names.len(),
            args.series.len()
        )));
    }
    let runs = args
        .series
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let name = args.names.get(i).cloned().unwrap_or_else(|| default_name(p));
            Ok((name, read_entropy_totals(p)?))
        })
        .collect::<Result<Vec<_>, acluster::Error>>()?;
    let cmp = Comparison::new(runs)?;

    let out = args
        .output
        .unwrap_or_else(|| default_out_dir().join("merged.csv"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(&out, cmp.merged_csv()).map_err(|e| CliError::io(&out, e))?;
    print!("{}", cmp.ranking_table());
    println!("merged series: {}", out.display());
    Ok(())
}
