//! Plain-text outputs: entropy series, grid snapshots and cluster listings.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metrics::{ClusterReport, EntropyRecord};

pub const EMPTY_RGB: [u8; 3] = [255, 255, 255];
pub const AGENT_RGB: [u8; 3] = [0, 0, 0];

const PALETTE: [[u8; 3]; 8] = [
    [228, 26, 28],
    [55, 126, 184],
    [77, 175, 74],
    [152, 78, 163],
    [255, 127, 0],
    [200, 200, 40],
    [166, 86, 40],
    [247, 129, 191],
];

/// Distinct colour per class index; never white or black.
pub fn class_colors(n_classes: usize) -> Vec<[u8; 3]> {
    let mut used: HashSet<[u8; 3]> = [EMPTY_RGB, AGENT_RGB].into_iter().collect();
    let mut out = Vec::with_capacity(n_classes);
    for k in 0..n_classes {
        let mut c = if let Some(&fixed) = PALETTE.get(k) {
            fixed
        } else {
            let hue = (k as f64 * 0.618_033_988_749_895).fract();
            hsv_to_rgb(hue, 0.65, 0.85)
        };
        while used.contains(&c) {
            c[2] = c[2].wrapping_add(1);
        }
        used.insert(c);
        out.push(c);
    }
    out
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    let (r, g, b) = match i as i32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8,
    ]
}

/// Plain PPM (P3), one pixel per cell. Agents are drawn over items.
pub fn render_ppm(grid: &Grid, dataset: &Dataset, show_agents: bool) -> String {
    let colors = class_colors(dataset.classes().len());
    let side = grid.side();
    let mut out = format!("P3\n{side} {side}\n255\n");
    for y in 0..side {
        let row: Vec<String> = (0..side)
            .map(|x| {
                let i = y * side + x;
                let rgb = if show_agents && grid.agent_slots()[i].is_some() {
                    AGENT_RGB
                } else if let Some(id) = grid.item_slots()[i] {
                    colors[dataset.class_index(id)]
                } else {
                    EMPTY_RGB
                };
                format!("{} {} {}", rgb[0], rgb[1], rgb[2])
            })
            .collect();
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}

/// Decoded plain PPM: `(width, height, pixels)` in row-major order.
pub fn parse_ppm(text: &str) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let bad = |m: &str| Error::Config(format!("malformed PPM: {m}"));
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P3") {
        return Err(bad("missing P3 magic"));
    }
    let mut num = |what: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(what))
    };
    let (w, h, max) = (num("width")?, num("height")?, num("maxval")?);
    if max != 255 {
        return Err(bad("maxval must be 255"));
    }
    let mut pixels = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        let r = num("pixel")?;
        let g = num("pixel")?;
        let b = num("pixel")?;
        if r > 255 || g > 255 || b > 255 {
            return Err(bad("sample above maxval"));
        }
        pixels.push([r as u8, g as u8, b as u8]);
    }
    Ok((w, h, pixels))
}

/// Scalable snapshot with one glyph per item: circle, triangle, disc, plus,
/// cycling for further classes. Agents are small black squares.
pub fn render_svg(grid: &Grid, dataset: &Dataset, show_agents: bool) -> String {
    const CELL: usize = 10;
    let side = grid.side();
    let colors = class_colors(dataset.classes().len());
    let mut out = String::new();
    let px = side * CELL;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" viewBox="0 0 {px} {px}">"#
    );
    let _ = writeln!(out, r#"<rect width="{px}" height="{px}" fill="white"/>"#);
    for i in 0..grid.n_cells() {
        let p = grid.pos(i);
        let (cx, cy) = (p.x * CELL + CELL / 2, p.y * CELL + CELL / 2);
        if let Some(id) = grid.item_slots()[i] {
            let k = dataset.class_index(id);
            let [r, g, b] = colors[k];
            let color = format!("rgb({r},{g},{b})");
            let glyph = match k % 4 {
                0 => format!(
                    r#"<circle cx="{cx}" cy="{cy}" r="3.5" fill="none" stroke="{color}" stroke-width="1.5"/>"#
                ),
                1 => format!(
                    r#"<polygon points="{},{} {},{} {},{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    cx,
                    cy - 4,
                    cx - 4,
                    cy + 3,
                    cx + 4,
                    cy + 3
                ),
                2 => format!(r#"<circle cx="{cx}" cy="{cy}" r="3.5" fill="{color}"/>"#),
                _ => format!(
                    r#"<path d="M{} {cy}H{}M{cx} {}V{}" stroke="{color}" stroke-width="1.5"/>"#,
                    cx - 4,
                    cx + 4,
                    cy - 4,
                    cy + 4
                ),
            };
            out.push_str(&glyph);
            out.push('\n');
        }
        if show_agents && grid.agent_slots()[i].is_some() {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="3" height="3" fill="black"/>"#,
                p.x * CELL,
                p.y * CELL
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// `t, E_<class>..., E_total` with a header row.
pub fn entropy_csv(records: &[EntropyRecord]) -> String {
    let mut out = String::from("t");
    if let Some(first) = records.first() {
        for class in first.per_class.keys() {
            let _ = write!(out, ",E_{class}");
        }
    }
    out.push_str(",E_total\n");
    for r in records {
        let _ = write!(out, "{}", r.t);
        for v in r.per_class.values() {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", r.total);
    }
    out
}

/// `(t, E_total)` pairs read back from an entropy CSV.
pub fn read_entropy_totals(path: impl AsRef<Path>) -> Result<Vec<(u64, f64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let total_col = cols
        .iter()
        .position(|c| *c == "E_total")
        .ok_or_else(|| Error::Alignment(format!("{}: no E_total column", path.display())))?;
    if cols.first() != Some(&"t") {
        return Err(Error::Alignment(format!(
            "{}: first column is not t",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Format {
                line: idx + 1,
                expected: cols.len(),
                found: fields.len(),
            });
        }
        let parse_err = |f: &str| Error::Parse {
            line: idx + 1,
            field: f.to_string(),
        };
        let t = fields[0].parse().map_err(|_| parse_err(fields[0]))?;
        let e = fields[total_col]
            .parse()
            .map_err(|_| parse_err(fields[total_col]))?;
        out.push((t, e));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    pub steps: Vec<u64>,
    /// One E_total column per run.
    pub totals: Vec<Vec<f64>>,
}

impl Comparison {
    /// Aligns runs on a shared step grid.
    pub fn new(runs: Vec<(String, Vec<(u64, f64)>)>) -> Result<Self> {
        if runs.len() < 2 {
            return Err(Error::Alignment("need at least two series".into()));
        }
        let steps: Vec<u64> = runs[0].1.iter().map(|(t, _)| *t).collect();
        let mut names: Vec<String> = Vec::new();
        let mut totals = Vec::new();
        for (name, series) in runs {
            let these: Vec<u64> = series.iter().map(|(t, _)| *t).collect();
            if these != steps {
                return Err(Error::Alignment(format!(
                    "{name} differs from {}",
                    names.first().map_or("", String::as_str)
                )));
            }
            let mut unique = name.clone();
            let mut k = 2;
            while names.contains(&unique) {
                unique = format!("{name}#{k}");
                k += 1;
            }
            names.push(unique);
            totals.push(series.into_iter().map(|(_, e)| e).collect());
        }
        Ok(Comparison { names, steps, totals })
    }

    pub fn merged_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (row, t) in self.steps.iter().enumerate() {
            let _ = write!(out, "{t}");
            for col in &self.totals {
                let _ = write!(out, ",{}", col[row]);
            }
            out.push('\n');
        }
        out
    }

    /// Runs ordered by final E_total, lowest (best clustered) first.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut r: Vec<(String, f64)> = self
            .names
            .iter()
            .zip(&self.totals)
            .map(|(n, col)| (n.clone(), col.last().copied().unwrap_or(f64::NAN)))
            .collect();
        r.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        r
    }

    pub fn ranking_table(&self) -> String {
        let mut out = String::from("rank  final_E_total  run\n");
        for (i, (name, e)) in self.ranking().iter().enumerate() {
            let _ = writeln!(out, "{:>4}  {:>13.6}  {name}", i + 1, e);
        }
        out
    }
}

/// Spreadsheet-style column letters: A..Z, AA, AB, ...
pub fn cluster_letter(mut index: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).expect("ascii")
}

/// How an item is named in listings: its label when labels identify items
/// uniquely, `id:label` when labels are classes, the bare id otherwise.
pub fn item_names(dataset: &Dataset) -> Vec<String> {
    let labels: Vec<Option<&str>> = dataset.items().iter().map(|i| i.label.as_deref()).collect();
    let unique =
        labels.iter().all(Option::is_some) && labels.iter().collect::<HashSet<_>>().len() == labels.len();
    dataset
        .items()
        .iter()
        .map(|it| match (&it.label, unique) {
            (Some(l), true) => l.clone(),
            (Some(l), false) => format!("{}:{l}", it.id),
            (None, _) => it.id.to_string(),
        })
        .collect()
}

/// One line per cluster, `(A) name, name, ...`, preceded by `#` summary lines.
pub fn cluster_listing(report: &ClusterReport, dataset: &Dataset, final_entropy: &EntropyRecord) -> String {
    let names = item_names(dataset);
    let mut out = String::new();
    let _ = writeln!(out, "# clusters: {}", report.n_clusters);
    let _ = writeln!(out, "# final E_total: {}", final_entropy.total);
    if let Some(p) = report.mean_purity(10) {
        let _ = writeln!(out, "# mean purity (size >= 10): {p}");
    }
    for (k, c) in report.clusters.iter().enumerate() {
        let members: Vec<&str> = c.members.iter().map(|&id| names[id as usize].as_str()).collect();
        let _ = writeln!(out, "({}) {}.", cluster_letter(k), members.join(", "));
    }
    out
}

/// `cluster,size,majority,purity` table matching [`cluster_listing`] order.
pub fn cluster_table(report: &ClusterReport) -> String {
    let mut out = String::from("cluster,size,majority,purity\n");
    for (k, c) in report.clusters.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            cluster_letter(k),
            c.size,
            c.majority_label,
            c.purity
        );
    }
    out
}
