use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::plan::{ReportRow, REPORT_HEADER};
use crate::error::{Error, Result};

/// One run directory's aggregate as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub regime: String,
    pub completed: usize,
    pub total: usize,
    pub rows: Vec<ReportRow>,
}

#[derive(Deserialize)]
struct RunJson {
    regime: String,
    completed: usize,
    total: usize,
}

/// Collect the run directories at `run_dir` (itself and/or its immediate
/// subdirectories, by name) and render a markdown table with one row per
/// run and one `mean ± std` column per metric, plus a long-form CSV.
///
/// Accuracies are shown as percentages in the markdown; the CSV keeps raw
/// fractions.
pub fn emit_report(run_dir: &Path) -> Result<(String, String, Vec<RunSummary>)> {
    let mut dirs: Vec<PathBuf> = Vec::new();
    if run_dir.join("run.json").is_file() {
        dirs.push(run_dir.to_path_buf());
    }
    let entries = std::fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))?;
    let mut subs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("run.json").is_file())
        .collect();
    subs.sort();
    dirs.extend(subs);
    if dirs.is_empty() {
        return Err(Error::EmptyRunDir(run_dir.to_path_buf()));
    }
    let runs: Vec<RunSummary> = dirs.iter().map(|d| load_summary(run_dir, d)).collect::<Result<_>>()?;
    Ok((markdown(&runs), long_csv(&runs), runs))
}

fn load_summary(root: &Path, dir: &Path) -> Result<RunSummary> {
    let meta_path = dir.join("run.json");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: RunJson = serde_json::from_str(&text)?;
    let report_path = dir.join("report.csv");
    let text = std::fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
    let rows = parse_report(&report_path.display().to_string(), &text)?;
    let name = dir
        .strip_prefix(root)
        .ok()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| ".".to_string(), |p| p.display().to_string());
    Ok(RunSummary { name, regime: meta.regime, completed: meta.completed, total: meta.total, rows })
}

pub(crate) fn parse_report(name: &str, text: &str) -> Result<Vec<ReportRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::format_at_line(name, 1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != REPORT_HEADER {
        return Err(Error::format_at_line(name, 1, format!("expected header `{REPORT_HEADER}`")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::format_at_line(name, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = || Error::format_at_line(name, line, "malformed report row");
        rows.push((
            rec[0].to_string(),
            rec[1].parse().map_err(|_| bad())?,
            rec[2].parse().map_err(|_| bad())?,
            rec[3].parse().map_err(|_| bad())?,
        ));
    }
    Ok(rows)
}

fn markdown(runs: &[RunSummary]) -> String {
    let mut metrics: Vec<&str> = Vec::new();
    for r in runs {
        for row in &r.rows {
            if !metrics.contains(&row.0.as_str()) {
                metrics.push(&row.0);
            }
        }
    }
    let mut out = String::new();
    let _ = write!(out, "| run | regime | completed |");
    for m in &metrics {
        let _ = write!(out, " {m} |");
    }
    out.push_str("\n|---|---|---|");
    out.push_str(&"---|".repeat(metrics.len()));
    out.push('\n');
    for r in runs {
        let _ = write!(out, "| {} | {} | {}/{} |", r.name, r.regime, r.completed, r.total);
        for m in &metrics {
            match r.rows.iter().find(|row| row.0 == *m) {
                Some((_, mean, std, n)) => {
                    let _ = write!(out, " {:.1} ± {:.2}", 100.0 * mean, 100.0 * std);
                    if *n == 1 {
                        out.push_str(" (n=1)");
                    }
                    out.push_str(" |");
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

fn long_csv(runs: &[RunSummary]) -> String {
    let mut out = String::from("run,regime,metric,mean,std,n,completed,total\n");
    for r in runs {
        for (m, mean, std, n) in &r.rows {
            let _ = writeln!(out, "{},{},{m},{mean},{std},{n},{},{}", r.name, r.regime, r.completed, r.total);
        }
    }
    out
}
