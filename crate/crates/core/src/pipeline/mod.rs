//! Training regimes and multi-seed experiment orchestration.

mod history;
mod plan;
mod report;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use history::{EpochRecord, RunHistory, RunStatus, HISTORY_HEADER};
pub use plan::{run_plan, run_plan_with, ExperimentPlan, PlanResult, RunOutcome, REPORT_HEADER};
pub use report::{emit_report, RunSummary};
pub use train::{fit, train_noisy_pretrain, train_standard, Fit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Regime {
    Standard,
    NoisyPretrain,
    StandardLs,
    NoisyPretrainLs,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Standard, Regime::NoisyPretrain, Regime::StandardLs, Regime::NoisyPretrainLs];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Standard => "standard",
            Regime::NoisyPretrain => "noisy_pretrain",
            Regime::StandardLs => "standard+ls",
            Regime::NoisyPretrainLs => "noisy_pretrain+ls",
        }
    }

    pub fn is_noisy(self) -> bool {
        matches!(self, Regime::NoisyPretrain | Regime::NoisyPretrainLs)
    }

    pub fn is_smoothed(self) -> bool {
        matches!(self, Regime::StandardLs | Regime::NoisyPretrainLs)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts `-` or `_` as word separator and `+ls` or `-ls` as suffix.
impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_").replace("_ls", "+ls");
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown regime `{s}`")))
    }
}

impl TryFrom<String> for Regime {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Regime> for String {
    fn from(r: Regime) -> String {
        r.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Standard,
    NoisyStage1,
    CleanStage2,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Standard => "standard",
            Stage::NoisyStage1 => "noisy-stage1",
            Stage::CleanStage2 => "clean-stage2",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        [Stage::Standard, Stage::NoisyStage1, Stage::CleanStage2].into_iter().find(|st| st.as_str() == s)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
