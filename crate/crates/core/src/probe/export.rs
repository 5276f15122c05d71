//! Text and image writers for probe results.
//!
//! Every artifact begins with `# `-prefixed provenance lines (PGM files carry
//! them as header comments). Floats use Rust's shortest round-trip format so
//! identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::{mean_std, BoundaryGrid, GroupReport, ShuffleResult};
use crate::error::{Error, Result};

/// Command line, seed and tool version stamped onto every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub command: String,
    pub seed: String,
    pub version: String,
}

impl Provenance {
    pub fn new(command: impl Into<String>, seed: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            seed: seed.into(),
            version: format!("simbias {}", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn header(&self) -> String {
        let clean = |s: &str| s.replace(['\n', '\r'], " ");
        format!(
            "# command: {}\n# seed: {}\n# version: {}\n",
            clean(&self.command),
            clean(&self.seed),
            clean(&self.version)
        )
    }
}

/// One `metric,block_or_group,mean,std,n,baseline` row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub key: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub baseline: Option<f64>,
}

pub const METRIC_HEADER: &str = "metric,block_or_group,mean,std,n,baseline";

pub fn metric_csv(prov: &Provenance, rows: &[MetricRow]) -> String {
    let mut out = prov.header();
    out.push_str(METRIC_HEADER);
    out.push('\n');
    for r in rows {
        let baseline = r.baseline.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{}", r.metric, r.key, r.mean, r.std, r.n, baseline);
    }
    out
}

/// Rows for shuffle results; results for the same block (e.g. one per seed)
/// are pooled into one row whose `n` counts them.
pub fn shuffle_rows(results: &[ShuffleResult]) -> Vec<MetricRow> {
    let mut blocks: Vec<&str> = Vec::new();
    for r in results {
        if !blocks.contains(&r.block.as_str()) {
            blocks.push(&r.block);
        }
    }
    blocks
        .into_iter()
        .map(|b| {
            let same: Vec<&ShuffleResult> = results.iter().filter(|r| r.block == b).collect();
            let means: Vec<f64> = same.iter().map(|r| r.mean).collect();
            let baselines: Vec<f64> = same.iter().map(|r| r.baseline).collect();
            let (mean, std) = if same.len() == 1 { (same[0].mean, same[0].std) } else { mean_std(&means) };
            MetricRow {
                metric: "shuffle".into(),
                key: b.to_string(),
                mean,
                std,
                n: if same.len() == 1 { same[0].repeats } else { same.len() },
                baseline: Some(mean_std(&baselines).0),
            }
        })
        .collect()
}

/// Rows for group reports pooled across runs: one per group plus the
/// in-group, out-group and worst-group aggregates that are defined.
pub fn group_rows(reports: &[GroupReport]) -> Vec<MetricRow> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    let row = |metric: &str, key: &str, vals: Vec<f64>| {
        let (mean, std) = mean_std(&vals);
        MetricRow { metric: metric.into(), key: key.into(), mean, std, n: vals.len(), baseline: None }
    };
    let mut rows = Vec::new();
    for (k, g) in first.groups.iter().enumerate() {
        let vals = reports.iter().filter_map(|r| r.groups.get(k)).map(|g| g.accuracy).collect();
        rows.push(row("group", &g.name, vals));
    }
    let agg: [(&str, fn(&GroupReport) -> Option<f64>); 3] = [
        ("in_group", |r| r.in_group),
        ("out_group", |r| r.out_group),
        ("worst_group", |r| Some(r.worst_group)),
    ];
    for (name, get) in agg {
        let vals: Vec<f64> = reports.iter().filter_map(get).collect();
        if !vals.is_empty() {
            rows.push(row(name, "all", vals));
        }
    }
    rows
}

pub fn vector_csv(prov: &Provenance, values: &[f64]) -> String {
    let mut out = prov.header();
    out.push_str("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

/// Min-max normalize `values` to 0..=255. A constant input maps to 0.
pub fn normalize_u8(values: &[f64]) -> (Vec<u8>, f64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let px = values
        .iter()
        .map(|&v| if span > 0.0 { ((v - min) / span * 255.0).round() as u8 } else { 0 })
        .collect();
    (px, min, max)
}

/// Binary PGM (P5) image of `values` laid out row-major as `height × width`.
pub fn pgm(prov: &Provenance, values: &[f64], height: usize, width: usize) -> Result<(Vec<u8>, f64, f64)> {
    if values.len() != height * width || values.is_empty() {
        return Err(Error::Shape(format!("{} values do not fill a {height}×{width} image", values.len())));
    }
    let (px, min, max) = normalize_u8(values);
    let mut out = format!("P5\n{}{width} {height}\n255\n", prov.header()).into_bytes();
    out.extend_from_slice(&px);
    Ok((out, min, max))
}

pub fn bounds_text(prov: &Provenance, min: f64, max: f64) -> String {
    format!("{}min {min}\nmax {max}\n", prov.header())
}

pub fn boundary_csv(prov: &Provenance, grid: &BoundaryGrid) -> String {
    let mut out = prov.header();
    let fixed: Vec<String> = grid.fixed.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "# axes: {},{}", grid.axes.0, grid.axes.1);
    let _ = writeln!(out, "# fixed: {}", fixed.join(" "));
    out.push_str("x,y,prob1,pred\n");
    for (r, y) in grid.ys.iter().enumerate() {
        for (c, x) in grid.xs.iter().enumerate() {
            let _ = writeln!(out, "{x},{y},{},{}", grid.probability(r, c), grid.prediction(r, c));
        }
    }
    out
}

/// Probability heatmap with larger `y` at the top of the image.
pub fn boundary_pgm(prov: &Provenance, grid: &BoundaryGrid) -> Result<Vec<u8>> {
    let r = grid.resolution;
    let flipped: Vec<f64> = (0..r).rev().flat_map(|row| (0..r).map(move |c| (row, c))).map(|(row, c)| grid.probability(row, c)).collect();
    // probabilities are drawn on a fixed 0..1 scale rather than min-max
    let mut out = format!("P5\n{}{r} {r}\n255\n", prov.header()).into_bytes();
    out.extend(flipped.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
