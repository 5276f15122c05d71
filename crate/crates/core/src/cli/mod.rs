//! The `simbias` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or format
//! error, 3 training divergence.

mod args;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::datagen::{
    build_dominoes, gen_slab, load_cifar10, load_group_table, load_idx, CorrelationSpec, Dataset, ImageSet, SlabSpec,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::nnet::{load_model, Mlp};
use crate::pipeline::{emit_report, run_plan_with, ExperimentPlan, RunStatus};
use crate::probe::export::{
    self, bounds_text, boundary_csv, boundary_pgm, group_rows, metric_csv, pgm, shuffle_rows, vector_csv, MetricRow,
    Provenance,
};
use crate::probe::{
    boundary_grid, ensemble_accuracy, group_accuracy, mean_pairwise_disagreement, mean_std, nfm_top_eigvec,
    shuffle_accuracy, PowerIteration, DEFAULT_SHUFFLE_REPEATS,
};
use crate::seed;

pub use args::parse_seeds;
pub use manifest::{write_manifest, MANIFEST_NAME};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "simbias", version, about = "Simplicity-bias experiments with small ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a multi-slab dataset
    GenSlab(GenSlabArgs),
    /// Collate two image sources into a Dominoes dataset
    GenDominoes(GenDominoesArgs),
    /// Convert a group-annotated CSV table into a dataset
    ImportGroups(ImportGroupsArgs),
    /// Train one regime over a list of seeds and probe every model
    Train(TrainArgs),
    /// Block shuffle accuracy of a model
    ProbeShuffle(ProbeShuffleArgs),
    /// Per-group and worst-group accuracy of a model
    ProbeGroups(ProbeGroupsArgs),
    /// First-layer Gram matrix diagonal and top eigenvector
    ProbeNfm(ProbeNfmArgs),
    /// Decision-boundary grid over two input axes
    ProbeBoundary(ProbeBoundaryArgs),
    /// Majority-vote accuracy and pairwise disagreement of several models
    Ensemble(EnsembleArgs),
    /// Summarize one or more training run directories
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenSlabArgs {
    /// JSON file with slab parameters; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dims: Option<usize>,
    /// Slab counts for coordinates 2..d
    #[arg(long, value_delimiter = ',')]
    slabs: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    linear_margin: Option<f64>,
    /// Fraction of rows whose feature 1 is resampled independently of the label
    #[arg(long)]
    noise: Option<f64>,
    /// Apply a random orthogonal projection
    #[arg(long)]
    project: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra rows generated alongside and written to --test-out
    #[arg(long, requires = "test_out")]
    test_n: Option<usize>,
    #[arg(long, requires = "test_n")]
    test_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// One image source: an IDX image/label pair or a CIFAR-10 batch.
struct ImageSource {
    images: Option<PathBuf>,
    labels: Option<PathBuf>,
    cifar: Option<PathBuf>,
    kind: Vocabulary,
}

#[derive(Debug, Args)]
struct GenDominoesArgs {
    #[arg(long)]
    top_images: Option<PathBuf>,
    #[arg(long)]
    top_labels: Option<PathBuf>,
    #[arg(long, default_value = "mnist")]
    top_kind: String,
    #[arg(long)]
    top_cifar: Option<PathBuf>,
    /// Class names for label 0 and 1, e.g. `0,1`
    #[arg(long)]
    top_classes: String,
    #[arg(long)]
    bottom_images: Option<PathBuf>,
    #[arg(long)]
    bottom_labels: Option<PathBuf>,
    #[arg(long, default_value = "fashion-mnist")]
    bottom_kind: String,
    #[arg(long)]
    bottom_cifar: Option<PathBuf>,
    #[arg(long)]
    bottom_classes: String,
    /// Fraction of rows whose correlated block agrees with the label
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Block carrying the imperfect correlation
    #[arg(long, default_value = "top")]
    correlate: String,
    #[arg(long)]
    n: usize,
    #[arg(long, requires = "test_out")]
    test_n: Option<usize>,
    /// Correlation for the test set; defaults to --rho
    #[arg(long)]
    test_rho: Option<f64>,
    /// Fraction of every source class reserved for the test set
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, requires = "test_n")]
    test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImportGroupsArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// JSON plan file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// standard, noisy-pretrain, standard+ls or noisy-pretrain+ls
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Layer sizes, e.g. 4,100,200,2
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<usize>>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    stop_train_acc: Option<f64>,
    #[arg(long)]
    stage1_epochs: Option<usize>,
    #[arg(long)]
    stage1_stop_acc: Option<f64>,
    /// Epochs a run completes (all stages) before the stop thresholds apply
    #[arg(long)]
    min_epochs: Option<usize>,
    /// Seed list such as `1..10` or `1,3,5`
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    shuffle_repeats: Option<usize>,
    /// Blocks to shuffle; all blocks by default
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<String>>,
    /// Seeds trained in parallel
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeShuffleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Blocks to shuffle; all blocks by default
    #[arg(long, value_delimiter = ',')]
    block: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_SHUFFLE_REPEATS)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeGroupsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeNfmArgs {
    #[arg(long)]
    model: PathBuf,
    /// Heatmap shape HxW; inferred for 784 and 1568 inputs
    #[arg(long)]
    shape: Option<String>,
    /// Seed of the power-iteration start vector
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeBoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset whose projection maps grid points to model inputs
    #[arg(long)]
    data: Option<PathBuf>,
    /// 1-based axis pair, e.g. 1,2
    #[arg(long, default_value = "1,2")]
    axes: String,
    /// Values of all coordinates off the plotted axes (default 0)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fixed: Option<Vec<f64>>,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
    range: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Model files
    #[arg(long, value_delimiter = ',', required_unless_present = "run")]
    models: Vec<PathBuf>,
    /// Training run directory; uses every seed-*/model.mlpb
    #[arg(long, conflicts_with = "models")]
    run: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directory, or a directory of run directories
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parse `argv` (program name first), run the command and return the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let command = command_line(&argv);
    match dispatch(cli.command, &command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("simbias: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGED,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_USAGE,
    }
}

fn command_line(argv: &[OsString]) -> String {
    std::iter::once("simbias".to_string())
        .chain(argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn dispatch(cmd: Command, command: &str) -> Result<i32> {
    match cmd {
        Command::GenSlab(a) => gen_slab_cmd(a, command),
        Command::GenDominoes(a) => gen_dominoes_cmd(a, command),
        Command::ImportGroups(a) => import_groups_cmd(a, command),
        Command::Train(a) => train_cmd(a, command),
        Command::ProbeShuffle(a) => probe_shuffle_cmd(a, command),
        Command::ProbeGroups(a) => probe_groups_cmd(a, command),
        Command::ProbeNfm(a) => probe_nfm_cmd(a, command),
        Command::ProbeBoundary(a) => probe_boundary_cmd(a, command),
        Command::Ensemble(a) => ensemble_cmd(a, command),
        Command::Report(a) => report_cmd(a, command),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(flag: &str, path: &Path) -> Result<T> {
    args::require_file(flag, path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{flag} {}: {e}", path.display())))
}

fn load_dataset(flag: &str, path: &Path) -> Result<Dataset> {
    args::require_file(flag, path)?;
    Dataset::load(path)
}

fn load_model_flag(flag: &str, path: &Path) -> Result<Mlp> {
    args::require_file(flag, path)?;
    load_model(path)
}

fn stamp(ds: &mut Dataset, prov: &Provenance) {
    ds.meta.provenance = Some(prov.header());
}

fn gen_slab_cmd(a: GenSlabArgs, command: &str) -> Result<i32> {
    let mut spec: SlabSpec = match &a.config {
        Some(p) => read_json("--config", p)?,
        None => SlabSpec::default(),
    };
    if let Some(d) = a.dims {
        spec.d = d;
        if a.slabs.is_none() && spec.k.len() != d.saturating_sub(1) {
            spec.k = (0..d.saturating_sub(1)).map(|j| 3 + 2 * j).collect();
        }
    }
    if let Some(k) = a.slabs {
        spec.k = k;
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(m) = a.margin {
        spec.margin = m;
    }
    if let Some(m) = a.linear_margin {
        spec.linear_margin = m;
    }
    if let Some(f) = a.noise {
        spec.noise_frac = f;
    }
    spec.project |= a.project;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    args::output_file("--out", &a.out)?;
    let prov = Provenance::new(command, spec.seed.to_string());
    match (a.test_n, &a.test_out) {
        (Some(test_n), Some(test_out)) => {
            args::output_file("--test-out", test_out)?;
            let train_n = spec.n;
            if test_n == 0 {
                return Err(Error::Config("--test-n must be positive".into()));
            }
            let all = gen_slab(&SlabSpec { n: train_n + test_n, ..spec })?;
            let (mut train, mut test) = all.split_at(train_n)?;
            stamp(&mut train, &prov);
            stamp(&mut test, &prov);
            train.save(&a.out)?;
            test.save(test_out)?;
        }
        _ => {
            let mut ds = gen_slab(&spec)?;
            stamp(&mut ds, &prov);
            ds.save(&a.out)?;
        }
    }
    Ok(EXIT_OK)
}

fn load_source(prefix: &str, src: ImageSource) -> Result<ImageSet> {
    match (src.images, src.labels, src.cifar) {
        (Some(i), Some(l), None) => {
            args::require_file(&format!("--{prefix}-images"), &i)?;
            args::require_file(&format!("--{prefix}-labels"), &l)?;
            if src.kind == Vocabulary::Cifar10 {
                return Err(Error::Config(format!("--{prefix}-kind cifar10 needs --{prefix}-cifar")));
            }
            load_idx(&i, &l, src.kind)
        }
        (None, None, Some(c)) => {
            args::require_file(&format!("--{prefix}-cifar"), &c)?;
            load_cifar10(&c)
        }
        _ => Err(Error::Config(format!(
            "give either --{prefix}-images with --{prefix}-labels, or --{prefix}-cifar"
        ))),
    }
}

fn gen_dominoes_cmd(a: GenDominoesArgs, command: &str) -> Result<i32> {
    let top_kind = if a.top_cifar.is_some() { Vocabulary::Cifar10 } else { Vocabulary::parse(&a.top_kind)? };
    let bottom_kind = if a.bottom_cifar.is_some() { Vocabulary::Cifar10 } else { Vocabulary::parse(&a.bottom_kind)? };
    let top_classes = args::parse_pair("--top-classes", &a.top_classes)?;
    let bottom_classes = args::parse_pair("--bottom-classes", &a.bottom_classes)?;
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(Error::Config(format!("--holdout {} outside [0, 1)", a.holdout)));
    }
    args::output_file("--out", &a.out)?;
    let top = load_source("top", ImageSource { images: a.top_images, labels: a.top_labels, cifar: a.top_cifar, kind: top_kind })?;
    let bottom = load_source(
        "bottom",
        ImageSource { images: a.bottom_images, labels: a.bottom_labels, cifar: a.bottom_cifar, kind: bottom_kind },
    )?;
    let prov = Provenance::new(command, a.seed.to_string());
    let corr = CorrelationSpec { rho: a.rho, target_block: a.correlate.clone() };
    let (top_test, top_train) = top.split(a.holdout, seed::derive(a.seed, "holdout-top"));
    let (bottom_test, bottom_train) = bottom.split(a.holdout, seed::derive(a.seed, "holdout-bottom"));
    let mut train = build_dominoes(
        &top_train,
        top_classes,
        &bottom_train,
        bottom_classes,
        &corr,
        a.n,
        seed::derive(a.seed, "train"),
    )?;
    let test = match (a.test_n, &a.test_out) {
        (Some(test_n), Some(test_out)) => {
            args::output_file("--test-out", test_out)?;
            let corr = CorrelationSpec { rho: a.test_rho.unwrap_or(a.rho), ..corr };
            let mut test = build_dominoes(
                &top_test,
                top_classes,
                &bottom_test,
                bottom_classes,
                &corr,
                test_n,
                seed::derive(a.seed, "test"),
            )?;
            stamp(&mut test, &prov);
            Some((test, test_out))
        }
        _ => None,
    };
    stamp(&mut train, &prov);
    train.save(&a.out)?;
    if let Some((test, path)) = test {
        test.save(path)?;
    }
    Ok(EXIT_OK)
}

fn import_groups_cmd(a: ImportGroupsArgs, command: &str) -> Result<i32> {
    args::require_file("--csv", &a.csv)?;
    args::output_file("--out", &a.out)?;
    let mut ds = load_group_table(&a.csv)?;
    stamp(&mut ds, &Provenance::new(command, "-"));
    ds.save(&a.out)?;
    Ok(EXIT_OK)
}

fn train_cmd(a: TrainArgs, command: &str) -> Result<i32> {
    let mut plan: ExperimentPlan = match &a.config {
        Some(p) => read_json("--config", p)?,
        None => ExperimentPlan::default(),
    };
    if let Some(d) = a.data {
        plan.dataset = Some(d);
    }
    if let Some(t) = a.test {
        plan.test_dataset = Some(t);
    }
    if let Some(r) = &a.regime {
        plan.regime = r.parse()?;
    }
    if a.p.is_some() {
        plan.p = a.p;
    }
    if a.eps.is_some() {
        plan.eps = a.eps;
    }
    if let Some(v) = a.arch {
        plan.arch = v;
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { plan.$field = v; } )* };
    }
    set!(lr, epochs, batch_size, stop_train_acc, stage1_epochs, stage1_stop_acc, min_epochs, shuffle_repeats);
    if let Some(s) = &a.seeds {
        plan.seeds = parse_seeds(s)?;
    }
    if a.blocks.is_some() {
        plan.shuffle_blocks = a.blocks;
    }
    if a.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let train_path = plan.dataset.clone().ok_or_else(|| Error::Config("--data is required".into()))?;
    let test_path = plan.test_dataset.clone().ok_or_else(|| Error::Config("--test is required".into()))?;
    args::require_file("--data", &train_path)?;
    args::require_file("--test", &test_path)?;
    args::output_dir("--out", &a.out)?;
    plan.validate()?;

    let train = Dataset::load(&train_path)?;
    let test = Dataset::load(&test_path)?;
    let result = run_plan_with(&plan, &train, &test, a.jobs)?;
    let written = result.write(&a.out, command)?;
    let seeds: Vec<String> = result.runs.iter().map(|r| r.seed.to_string()).collect();
    write_manifest(&a.out, &written, &Provenance::new(command, seeds.join(",")))?;

    for (name, mean, std, n) in result.report_rows() {
        println!("{name:<24} {mean:.4} ± {std:.4} (n={n})");
    }
    let diverged: Vec<String> = result
        .runs
        .iter()
        .filter_map(|r| match r.status() {
            RunStatus::Diverged { stage, epoch } => Some(format!("seed {} ({stage}, epoch {epoch})", r.seed)),
            _ => None,
        })
        .collect();
    if diverged.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("simbias: training diverged for {}", diverged.join(", "));
        Ok(EXIT_DIVERGED)
    }
}

fn probe_shuffle_cmd(a: ProbeShuffleArgs, command: &str) -> Result<i32> {
    let model = load_model_flag("--model", &a.model)?;
    let ds = load_dataset("--data", &a.data)?;
    args::output_file("--out", &a.out)?;
    let blocks = a.block.unwrap_or_else(|| ds.blocks.iter().map(|b| b.name.clone()).collect());
    let results = blocks
        .iter()
        .map(|b| shuffle_accuracy(&model, &ds, b, a.repeats, a.seed))
        .collect::<Result<Vec<_>>>()?;
    let prov = Provenance::new(command, a.seed.to_string());
    export::write_file(&a.out, metric_csv(&prov, &shuffle_rows(&results)))?;
    Ok(EXIT_OK)
}

fn probe_groups_cmd(a: ProbeGroupsArgs, command: &str) -> Result<i32> {
    let model = load_model_flag("--model", &a.model)?;
    let ds = load_dataset("--data", &a.data)?;
    args::output_file("--out", &a.out)?;
    let report = group_accuracy(&model, &ds)?;
    let prov = Provenance::new(command, "-");
    export::write_file(&a.out, metric_csv(&prov, &group_rows(std::slice::from_ref(&report))))?;
    Ok(EXIT_OK)
}

fn default_shape(d: usize) -> (usize, usize) {
    match d {
        1568 => (56, 28),
        784 => (28, 28),
        _ => (1, d),
    }
}

fn probe_nfm_cmd(a: ProbeNfmArgs, command: &str) -> Result<i32> {
    let model = load_model_flag("--model", &a.model)?;
    args::output_dir("--out", &a.out)?;
    let d = model.input_dim();
    let (h, w) = match &a.shape {
        Some(s) => args::parse_shape(s)?,
        None => default_shape(d),
    };
    if h * w != d {
        return Err(Error::Config(format!("--shape {h}x{w} does not cover {d} inputs")));
    }
    let opts = PowerIteration { max_iters: a.max_iters, tol: a.tol, seed: a.seed };
    let s = nfm_top_eigvec(&model, &opts);
    let prov = Provenance::new(command, a.seed.to_string());
    let mut written = Vec::new();
    for (name, values) in [("nfm_diag", &s.diag), ("nfm_eigvec", &s.top_eigvec)] {
        let (img, min, max) = pgm(&prov, values, h, w)?;
        let files = [
            (format!("{name}.csv"), vector_csv(&prov, values).into_bytes()),
            (format!("{name}.pgm"), img),
            (format!("{name}.bounds.txt"), bounds_text(&prov, min, max).into_bytes()),
        ];
        for (file, bytes) in files {
            export::write_file(&a.out.join(&file), bytes)?;
            written.push(PathBuf::from(file));
        }
    }
    let summary = serde_json::json!({
        "top_eigval": s.top_eigval,
        "iterations": s.iterations,
        "converged": s.converged,
        "degenerate": s.degenerate,
        "non_unique": s.non_unique,
        "shape": [h, w],
        "command": prov.command,
        "seed": prov.seed,
        "version": prov.version,
    });
    export::write_file(&a.out.join("nfm_summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push("nfm_summary.json".into());
    write_manifest(&a.out, &written, &prov)?;
    if s.non_unique {
        eprintln!("simbias: top eigenvalue is (near-)degenerate; the eigenvector is not unique");
    }
    Ok(EXIT_OK)
}

fn probe_boundary_cmd(a: ProbeBoundaryArgs, command: &str) -> Result<i32> {
    let model = load_model_flag("--model", &a.model)?;
    let ds = a.data.as_deref().map(|p| load_dataset("--data", p)).transpose()?;
    args::output_dir("--out", &a.out)?;
    let (i, j) = args::parse_pair("--axes", &a.axes)?;
    let axis = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Error::Config(format!("--axes: `{s}` is not a 1-based axis index"))),
        }
    };
    let axes = (axis(i)?, axis(j)?);
    let (lo, hi) = args::parse_pair("--range", &a.range)?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("--range: `{s}` is not a number")));
    let range = (num(lo)?, num(hi)?);
    let projection = ds.as_ref().and_then(|d| d.projection());
    let grid = boundary_grid(&model, projection, axes, a.fixed.as_deref(), a.resolution, range)?;
    let prov = Provenance::new(command, "-");
    export::write_file(&a.out.join("boundary.csv"), boundary_csv(&prov, &grid))?;
    export::write_file(&a.out.join("boundary.pgm"), boundary_pgm(&prov, &grid)?)?;
    write_manifest(&a.out, &["boundary.csv".into(), "boundary.pgm".into()], &prov)?;
    Ok(EXIT_OK)
}

fn run_models(dir: &Path) -> Result<Vec<PathBuf>> {
    args::require_dir("--run", dir)?;
    let mut found: Vec<(u64, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let seed = name.strip_prefix("seed-")?.parse::<u64>().ok()?;
            let model = e.path().join("model.mlpb");
            model.is_file().then_some((seed, model))
        })
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(Error::EmptyRunDir(dir.to_path_buf()));
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn ensemble_cmd(a: EnsembleArgs, command: &str) -> Result<i32> {
    let paths = match &a.run {
        Some(dir) => run_models(dir)?,
        None => a.models.clone(),
    };
    let models = paths.iter().map(|p| load_model_flag("--models", p)).collect::<Result<Vec<_>>>()?;
    let ds = load_dataset("--data", &a.data)?;
    args::output_file("--out", &a.out)?;
    let member: Vec<f64> = models.iter().map(|m| m.accuracy(&ds.features, &ds.labels)).collect::<Result<_>>()?;
    let (mean, std) = mean_std(&member);
    let mut rows = vec![
        MetricRow {
            metric: "ensemble_accuracy".into(),
            key: "all".into(),
            mean: ensemble_accuracy(&models, &ds)?,
            std: 0.0,
            n: models.len(),
            baseline: Some(mean),
        },
        MetricRow { metric: "member_accuracy".into(), key: "all".into(), mean, std, n: models.len(), baseline: None },
    ];
    if models.len() >= 2 {
        rows.push(MetricRow {
            metric: "mean_pairwise_disagreement".into(),
            key: "all".into(),
            mean: mean_pairwise_disagreement(&models, &ds)?,
            std: 0.0,
            n: models.len() * (models.len() - 1) / 2,
            baseline: None,
        });
    }
    export::write_file(&a.out, metric_csv(&Provenance::new(command, "-"), &rows))?;
    Ok(EXIT_OK)
}

fn report_cmd(a: ReportArgs, command: &str) -> Result<i32> {
    args::require_dir("--run", &a.run)?;
    args::output_dir("--out", &a.out)?;
    let (md, csv, _) = emit_report(&a.run)?;
    let prov = Provenance::new(command, "-");
    let md_header: String = prov.header().lines().map(|l| format!("<!-- {} -->\n", &l[2..])).collect();
    export::write_file(&a.out.join("report.md"), format!("{md_header}\n{md}"))?;
    export::write_file(&a.out.join("summary.csv"), format!("{}{csv}", prov.header()))?;
    write_manifest(&a.out, &["report.md".into(), "summary.csv".into()], &prov)?;
    print!("{md}");
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Divergence { stage: "standard".into(), epoch: 1 }), EXIT_DIVERGED);
        assert_eq!(exit_code(&Error::MissingGroups), EXIT_DATA);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["simbias", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["simbias", "gen-slab", "--bogus", "--out", "x"]), EXIT_USAGE);
        assert_eq!(run(["simbias", "--help"]), EXIT_OK);
    }

    #[test]
    fn command_line_is_stable() {
        let argv: Vec<OsString> = ["/usr/bin/simbias", "gen-slab", "--n", "5"].iter().map(OsString::from).collect();
        assert_eq!(command_line(&argv), "simbias gen-slab --n 5");
    }

    #[test]
    fn nfm_shape_defaults() {
        assert_eq!(default_shape(1568), (56, 28));
        assert_eq!(default_shape(784), (28, 28));
        assert_eq!(default_shape(4), (1, 4));
    }
}
