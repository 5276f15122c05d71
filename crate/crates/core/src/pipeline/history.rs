use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Stage;
use crate::error::{Error, Result};
use crate::probe::export::Provenance;

pub const HISTORY_HEADER: &str = "stage,epoch,loss,acc_stage_labels,acc_clean,acc_test";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: Stage,
    /// 1-based, counted across stages.
    pub epoch: usize,
    pub loss: f64,
    /// Training accuracy against the labels the stage trains on.
    pub acc_stage_labels: f64,
    pub acc_clean: f64,
    pub acc_test: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    /// The final stage reached its stop threshold.
    Converged,
    /// The final stage ran out of epochs first.
    CapReached,
    Diverged { stage: Stage, epoch: usize },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::CapReached => "cap_reached",
            RunStatus::Diverged { .. } => "diverged",
        }
    }

    pub fn is_completed(&self) -> bool {
        !matches!(self, RunStatus::Diverged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<EpochRecord>,
    pub status: RunStatus,
    /// Whether noisy pre-training reached its threshold before its cap.
    pub stage1_reached: Option<bool>,
}

impl RunHistory {
    pub fn new() -> Self {
        Self { records: Vec::new(), status: RunStatus::CapReached, stage1_reached: None }
    }

    pub fn next_epoch(&self) -> usize {
        self.records.last().map_or(1, |r| r.epoch + 1)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn stage_records(&self, stage: Stage) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }

    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut out = prov.header();
        let _ = writeln!(out, "# status: {}", self.status.label());
        if let RunStatus::Diverged { stage, epoch } = self.status {
            let _ = writeln!(out, "# diverged: {stage} epoch {epoch}");
        }
        if let Some(r) = self.stage1_reached {
            let _ = writeln!(out, "# stage1_reached: {r}");
        }
        out.push_str(HISTORY_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.stage, r.epoch, r.loss, r.acc_stage_labels, r.acc_clean, r.acc_test
            );
        }
        out
    }

    /// Parse the record rows of a history CSV; comment lines are skipped and
    /// the status is left at its default.
    pub fn records_from_csv(name: &str, text: &str) -> Result<Vec<EpochRecord>> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::format_at_line(name, 1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>().join(",") != HISTORY_HEADER {
            return Err(Error::format_at_line(name, 1, format!("expected header `{HISTORY_HEADER}`")));
        }
        let mut out = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::format_at_line(name, e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |what: &str| Error::format_at_line(name, line, format!("invalid {what}"));
            let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what));
            out.push(EpochRecord {
                stage: Stage::parse(&rec[0]).ok_or_else(|| bad("stage"))?,
                epoch: rec[1].parse().map_err(|_| bad("epoch"))?,
                loss: num(2, "loss")?,
                acc_stage_labels: num(3, "acc_stage_labels")?,
                acc_clean: num(4, "acc_clean")?,
                acc_test: num(5, "acc_test")?,
            });
        }
        Ok(out)
    }
}

impl Default for RunHistory {
    fn default() -> Self {
        Self::new()
    }
}
