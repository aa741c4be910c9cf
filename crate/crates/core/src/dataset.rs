//! Items, datasets and the normalized feature-space distance.
//!
//! A dataset is loaded once and stays immutable for the whole run. Its
//! normalization constant `d_max` is the largest root-mean-square distance
//! over every pair of items, so normalized distances always fall in `[0, 1]`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class name assigned to items that carry no label.
pub const UNLABELED: &str = "unlabeled";

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub id: u32,
    pub features: Vec<f64>,
    pub label: Option<String>,
}

impl Item {
    pub fn new(id: u32, features: Vec<f64>, label: Option<String>) -> Self {
        Item { id, features, label }
    }

    /// Class name used by the metrics; unlabeled items share one class.
    pub fn class_name(&self) -> &str {
        self.label.as_deref().unwrap_or(UNLABELED)
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    items: Vec<Item>,
    feature_dim: usize,
    d_max: f64,
    classes: Vec<String>,
    class_of: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from items whose ids must equal their position.
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyDataset)?;
        let feature_dim = first.features.len();
        if feature_dim == 0 {
            return Err(Error::Format {
                line: 1,
                expected: 1,
                found: 0,
            });
        }
        for (idx, item) in items.iter().enumerate() {
            if item.features.len() != feature_dim {
                return Err(Error::Dimension {
                    left: feature_dim,
                    right: item.features.len(),
                });
            }
            if item.id as usize != idx {
                return Err(Error::Config(format!(
                    "item at position {idx} has id {}; ids must be 0..n in order",
                    item.id
                )));
            }
        }

        let mut d_max = 0.0f64;
        for (i, a) in items.iter().enumerate() {
            for b in &items[i + 1..] {
                d_max = d_max.max(rms_distance(&a.features, &b.features));
            }
        }
        if d_max <= 0.0 {
            d_max = 1.0;
        }

        let classes: Vec<String> = items
            .iter()
            .map(|it| it.class_name().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let class_of = items
            .iter()
            .map(|it| {
                classes
                    .binary_search_by(|c| c.as_str().cmp(it.class_name()))
                    .expect("class collected above")
            })
            .collect();

        Ok(Dataset {
            items,
            feature_dim,
            d_max,
            classes,
            class_of,
        })
    }

    /// Convenience constructor from raw rows; ids are assigned by position.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(Error::Config(format!(
                    "{} rows but {} labels",
                    rows.len(),
                    labels.len()
                )));
            }
        }
        let mut labels = labels.map(|l| l.into_iter());
        let items = rows
            .into_iter()
            .enumerate()
            .map(|(i, f)| Item::new(i as u32, f, labels.as_mut().and_then(|l| l.next())))
            .collect();
        Dataset::new(items)
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, id: u32) -> &Item {
        &self.items[id as usize]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Sorted distinct class names.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Index into [`Dataset::classes`] for the given item.
    pub fn class_index(&self, id: u32) -> usize {
        self.class_of[id as usize]
    }

    pub fn is_labeled(&self) -> bool {
        self.items.iter().any(|it| it.label.is_some())
    }

    /// Normalized distance between two items of this dataset, by id.
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        rms_distance(&self.item(a).features, &self.item(b).features) / self.d_max
    }
}

fn rms_distance(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// `(1/d_max) * sqrt((1/F) * sum_i (a_i - b_i)^2)`.
pub fn normalized_distance(a: &Item, b: &Item, dataset: &Dataset) -> Result<f64> {
    if a.features.len() != b.features.len() {
        return Err(Error::Dimension {
            left: a.features.len(),
            right: b.features.len(),
        });
    }
    if a.features.len() != dataset.feature_dim {
        return Err(Error::Dimension {
            left: dataset.feature_dim,
            right: a.features.len(),
        });
    }
    Ok(rms_distance(&a.features, &b.features) / dataset.d_max)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Field separator; detected per line (tab if present, otherwise comma) when unset.
    pub delimiter: Option<char>,
    /// The last column holds a class label.
    pub labeled: bool,
    /// Skip the first non-blank line.
    pub header: bool,
}

/// Reads delimiter-separated records: F numeric columns and an optional
/// trailing label. Blank lines and lines starting with `#` are skipped.
pub fn load_dataset<R: BufRead>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut skipped_header = !opts.header;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !skipped_header {
            skipped_header = true;
            continue;
        }
        let delim = opts
            .delimiter
            .unwrap_or(if trimmed.contains('\t') { '\t' } else { ',' });
        let fields: Vec<&str> = trimmed.split(delim).map(str::trim).collect();

        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::Format {
                line: line_no,
                expected,
                found: fields.len(),
            });
        }
        let numeric = if opts.labeled {
            if fields.len() < 2 {
                return Err(Error::Format {
                    line: line_no,
                    expected: 2,
                    found: fields.len(),
                });
            }
            labels.push(fields[fields.len() - 1].to_string());
            &fields[..fields.len() - 1]
        } else {
            &fields[..]
        };
        let row = numeric
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        field: f.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::from_rows(rows, opts.labeled.then_some(labels))
}

pub fn load_dataset_file(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_dataset(BufReader::new(file), opts)
}

/// Writes the dataset as comma-separated text readable by [`load_dataset`].
/// Floats use the shortest round-tripping representation.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    for item in dataset.items() {
        let mut first = true;
        for v in &item.features {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{v}")?;
        }
        if let Some(label) = &item.label {
            write!(out, ",{label}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
