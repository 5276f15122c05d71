use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::history::RunStatus;
use super::train::{fit, Fit};
use super::Regime;
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::nnet::{model_to_bytes, TrainConfig};
use crate::probe::export::{self, group_rows, metric_csv, shuffle_rows, Provenance};
use crate::probe::{group_accuracy, mean_std, shuffle_accuracy, GroupReport, ShuffleResult, DEFAULT_SHUFFLE_REPEATS};

pub const REPORT_HEADER: &str = "metric,mean,std,n";

/// A regime, architecture and hyper-parameters run once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub dataset: Option<PathBuf>,
    pub test_dataset: Option<PathBuf>,
    pub regime: Regime,
    pub arch: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    pub stop_train_acc: f64,
    pub stage1_epochs: usize,
    pub stage1_stop_acc: f64,
    pub min_epochs: usize,
    pub seeds: Vec<u64>,
    pub shuffle_repeats: usize,
    /// Blocks to shuffle; every block when unset and there are several.
    pub shuffle_blocks: Option<Vec<String>>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            dataset: None,
            test_dataset: None,
            regime: Regime::Standard,
            arch: Vec::new(),
            lr: c.lr,
            epochs: c.epochs,
            batch_size: c.batch_size,
            p: None,
            eps: None,
            stop_train_acc: c.stop_train_acc,
            stage1_epochs: c.stage1_epochs,
            stage1_stop_acc: c.stage1_stop_acc,
            min_epochs: c.min_epochs,
            seeds: Vec::new(),
            shuffle_repeats: DEFAULT_SHUFFLE_REPEATS,
            shuffle_blocks: None,
        }
    }
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("plan has no seeds".into()));
        }
        if self.arch.len() < 2 || self.arch.contains(&0) {
            return Err(Error::Config(format!("invalid architecture {:?}", self.arch)));
        }
        if self.shuffle_repeats == 0 {
            return Err(Error::Config("shuffle_repeats must be at least 1".into()));
        }
        match (self.regime.is_noisy(), self.p) {
            (true, None) => return Err(Error::Config(format!("regime {} needs p", self.regime))),
            (false, Some(_)) => return Err(Error::Config(format!("p is only used by noisy regimes, not {}", self.regime))),
            _ => {}
        }
        match (self.regime.is_smoothed(), self.eps) {
            (true, None) => return Err(Error::Config(format!("regime {} needs eps", self.regime))),
            (false, Some(e)) if e != 0.0 => {
                return Err(Error::Config(format!("eps is only used by smoothed regimes, not {}", self.regime)))
            }
            _ => {}
        }
        self.config(self.seeds[0]).validate()
    }

    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            p: self.p,
            eps: self.eps.unwrap_or(0.0),
            stop_train_acc: self.stop_train_acc,
            stage1_epochs: self.stage1_epochs,
            stage1_stop_acc: self.stage1_stop_acc,
            min_epochs: self.min_epochs,
            seed,
        }
    }
}

/// One seed's training result and probe measurements.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub fit: Fit,
    /// Named scalar metrics in report order; empty for diverged runs.
    pub metrics: Vec<(String, f64)>,
    pub shuffle: Vec<ShuffleResult>,
    pub groups: Option<GroupReport>,
}

impl RunOutcome {
    pub fn status(&self) -> RunStatus {
        self.fit.history.status
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub plan: ExperimentPlan,
    /// Sorted by seed.
    pub runs: Vec<RunOutcome>,
}

/// Load the plan's datasets and run it.
pub fn run_plan(plan: &ExperimentPlan, jobs: usize) -> Result<PlanResult> {
    let train_path = plan.dataset.as_ref().ok_or_else(|| Error::Config("plan has no dataset".into()))?;
    let test_path = plan.test_dataset.as_ref().ok_or_else(|| Error::Config("plan has no test_dataset".into()))?;
    let train = Dataset::load(train_path)?;
    let test = Dataset::load(test_path)?;
    run_plan_with(plan, &train, &test, jobs)
}

/// Run every seed of `plan` on in-memory datasets, `jobs` seeds at a time.
pub fn run_plan_with(plan: &ExperimentPlan, train: &Dataset, test: &Dataset, jobs: usize) -> Result<PlanResult> {
    plan.validate()?;
    let blocks: Vec<String> = match &plan.shuffle_blocks {
        Some(b) => b.clone(),
        None if test.blocks.len() > 1 => test.blocks.iter().map(|b| b.name.clone()).collect(),
        None => Vec::new(),
    };
    for b in &blocks {
        test.block(b)?;
    }
    let mut seeds = plan.seeds.clone();
    seeds.sort_unstable();
    let one = |&seed: &u64| run_one(plan, train, test, &blocks, seed);
    let runs: Vec<RunOutcome> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(one).collect::<Result<_>>())?
    } else {
        seeds.iter().map(one).collect::<Result<_>>()?
    };
    Ok(PlanResult { plan: plan.clone(), runs })
}

fn run_one(plan: &ExperimentPlan, train: &Dataset, test: &Dataset, blocks: &[String], seed: u64) -> Result<RunOutcome> {
    let fit = fit(plan.regime, train, test, &plan.arch, &plan.config(seed))?;
    let mut out = RunOutcome { seed, fit, metrics: Vec::new(), shuffle: Vec::new(), groups: None };
    if !out.status().is_completed() {
        return Ok(out);
    }
    let model = &out.fit.model;
    out.metrics.push(("train_acc".into(), model.accuracy(&train.features, &train.labels)?));
    out.metrics.push(("test_acc".into(), model.accuracy(&test.features, &test.labels)?));
    for b in blocks {
        let r = shuffle_accuracy(model, test, b, plan.shuffle_repeats, seed)?;
        out.metrics.push((format!("shuffle:{b}"), r.mean));
        out.shuffle.push(r);
    }
    if test.groups.is_some() && test.meta.group_table.is_some() {
        let g = group_accuracy(model, test)?;
        for ga in &g.groups {
            out.metrics.push((format!("group:{}", ga.name), ga.accuracy));
        }
        out.metrics.extend(g.in_group.map(|v| ("in_group".to_string(), v)));
        out.metrics.extend(g.out_group.map(|v| ("out_group".to_string(), v)));
        out.metrics.push(("worst_group".into(), g.worst_group));
        out.groups = Some(g);
    }
    Ok(out)
}

/// `(metric, mean, std, n)` over completed runs.
pub type ReportRow = (String, f64, f64, usize);

impl PlanResult {
    pub fn completed(&self) -> usize {
        self.runs.iter().filter(|r| r.status().is_completed()).count()
    }

    pub fn report_rows(&self) -> Vec<ReportRow> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.runs {
            for (k, _) in &r.metrics {
                if !names.contains(&k.as_str()) {
                    names.push(k);
                }
            }
        }
        names
            .into_iter()
            .map(|name| {
                let vals: Vec<f64> = self.runs.iter().filter_map(|r| r.metric(name)).collect();
                let (mean, std) = mean_std(&vals);
                (name.to_string(), mean, std, vals.len())
            })
            .collect()
    }

    pub fn report_csv(&self, prov: &Provenance) -> String {
        let mut out = prov.header();
        let _ = writeln!(out, "# regime: {}", self.plan.regime);
        let _ = writeln!(out, "# completed: {} of {}", self.completed(), self.runs.len());
        for r in self.runs.iter().filter(|r| !r.status().is_completed()) {
            if let RunStatus::Diverged { stage, epoch } = r.status() {
                let _ = writeln!(out, "# excluded: seed {} diverged in {stage} at epoch {epoch}", r.seed);
            }
        }
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for (name, mean, std, n) in self.report_rows() {
            let _ = writeln!(out, "{name},{mean},{std},{n}");
        }
        out
    }

    /// Write the plan, aggregate report and per-seed artifacts under `dir`;
    /// returns the written paths relative to `dir`.
    pub fn write(&self, dir: &Path, command: &str) -> Result<Vec<PathBuf>> {
        let seeds: Vec<String> = self.runs.iter().map(|r| r.seed.to_string()).collect();
        let all = Provenance::new(command, seeds.join(","));
        let mut written = Vec::new();
        let mut put = |rel: PathBuf, bytes: Vec<u8>| -> Result<()> {
            export::write_file(&dir.join(&rel), bytes)?;
            written.push(rel);
            Ok(())
        };
        put("plan.json".into(), (serde_json::to_string_pretty(&self.plan)? + "\n").into_bytes())?;
        put("run.json".into(), (serde_json::to_string_pretty(&self.summary())? + "\n").into_bytes())?;
        put("report.csv".into(), self.report_csv(&all).into_bytes())?;
        for r in &self.runs {
            let prov = Provenance::new(command, r.seed.to_string());
            let sub = PathBuf::from(format!("seed-{}", r.seed));
            put(sub.join("history.csv"), r.fit.history.to_csv(&prov).into_bytes())?;
            if !r.status().is_completed() {
                continue;
            }
            let mut rows = shuffle_rows(&r.shuffle);
            if let Some(g) = &r.groups {
                rows.extend(group_rows(std::slice::from_ref(g)));
            }
            put(sub.join("probes.csv"), metric_csv(&prov, &rows).into_bytes())?;
            put(sub.join("model.mlpb"), model_to_bytes(&r.fit.model))?;
            if let Some(s1) = &r.fit.stage1 {
                put(sub.join("stage1.mlpb"), model_to_bytes(s1))?;
            }
        }
        Ok(written)
    }

    fn summary(&self) -> serde_json::Value {
        let runs: Vec<serde_json::Value> = self
            .runs
            .iter()
            .map(|r| {
                serde_json::json!({
                    "seed": r.seed,
                    "status": r.status().label(),
                    "epochs": r.fit.history.records.len(),
                    "stage1_reached": r.fit.history.stage1_reached,
                })
            })
            .collect();
        serde_json::json!({
            "regime": self.plan.regime,
            "completed": self.completed(),
            "total": self.runs.len(),
            "runs": runs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_slab, SlabSpec};

    fn data() -> (Dataset, Dataset) {
        let tr = gen_slab(&SlabSpec { n: 200, seed: 1, ..SlabSpec::default() }).unwrap();
        let te = gen_slab(&SlabSpec { n: 100, seed: 2, ..SlabSpec::default() }).unwrap();
        (tr, te)
    }

    fn plan(seeds: Vec<u64>) -> ExperimentPlan {
        ExperimentPlan { arch: vec![4, 8, 2], epochs: 2, seeds, shuffle_repeats: 2, ..Default::default() }
    }

    #[test]
    fn plan_json_defaults_and_strictness() {
        let p = ExperimentPlan::from_json(r#"{"regime": "noisy-pretrain", "p": 0.1, "arch": [4, 2], "seeds": [1]}"#).unwrap();
        assert_eq!(p.regime, Regime::NoisyPretrain);
        assert_eq!(p.batch_size, 64);
        p.validate().unwrap();
        assert!(ExperimentPlan::from_json(r#"{"seedz": [1]}"#).is_err());
        assert!(plan(vec![]).validate().is_err());
        assert!(ExperimentPlan { regime: Regime::NoisyPretrain, ..plan(vec![1]) }.validate().is_err());
        assert!(ExperimentPlan { regime: Regime::StandardLs, ..plan(vec![1]) }.validate().is_err());
        assert!(ExperimentPlan { p: Some(0.1), ..plan(vec![1]) }.validate().is_err());
    }

    #[test]
    fn single_seed_has_zero_std() {
        let (tr, te) = data();
        let r = run_plan_with(&plan(vec![3]), &tr, &te, 1).unwrap();
        let rows = r.report_rows();
        let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(names, ["train_acc", "test_acc", "shuffle:feature-1", "shuffle:feature-2", "shuffle:feature-3", "shuffle:feature-4"]);
        assert!(rows.iter().all(|r| r.2 == 0.0 && r.3 == 1));
    }

    #[test]
    fn duplicate_seeds_match_and_order_is_sorted() {
        let (tr, te) = data();
        let r = run_plan_with(&plan(vec![5, 2, 5]), &tr, &te, 1).unwrap();
        let seeds: Vec<u64> = r.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, [2, 5, 5]);
        assert_eq!(r.runs[1].metrics, r.runs[2].metrics);
    }

    #[test]
    fn parallel_matches_sequential() {
        let (tr, te) = data();
        let p = plan(vec![1, 2, 3]);
        let prov = Provenance::new("x", "1..3");
        let a = run_plan_with(&p, &tr, &te, 1).unwrap().report_csv(&prov);
        let b = run_plan_with(&p, &tr, &te, 3).unwrap().report_csv(&prov);
        assert_eq!(a, b);
    }

    #[test]
    fn diverged_runs_are_excluded() {
        let (tr, te) = data();
        let p = ExperimentPlan { lr: 1e300, arch: vec![4, 16, 2], ..plan(vec![1, 2]) };
        let r = run_plan_with(&p, &tr, &te, 1).unwrap();
        assert_eq!(r.completed(), 0);
        assert!(r.report_rows().is_empty());
        assert!(r.report_csv(&Provenance::new("x", "1")).contains("# excluded: seed 1 diverged"));
    }
}
