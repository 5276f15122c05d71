use rand::seq::SliceRandom;

use super::history::{EpochRecord, RunHistory, RunStatus};
use super::{Regime, Stage};
use crate::datagen::{flip_labels, Dataset};
use crate::error::{Error, Result};
use crate::nnet::{backward, mlp_init, sgd_step, Mlp, Scratch, TrainConfig};
use crate::seed;

/// Result of one training run, divergence included.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: Mlp,
    pub history: RunHistory,
    /// Weights at the end of noisy pre-training.
    pub stage1: Option<Mlp>,
    /// Stage-1 training labels.
    pub noisy_labels: Option<Vec<u8>>,
}

/// Standard training from Glorot initialization.
///
/// Stops once clean training accuracy reaches `cfg.stop_train_acc` or after
/// `cfg.epochs` epochs. A non-finite loss is an error.
pub fn train_standard(train: &Dataset, test: &Dataset, arch: &[usize], cfg: &TrainConfig) -> Result<(Mlp, RunHistory)> {
    let fit = fit(Regime::Standard, train, test, arch, cfg)?;
    into_result(&fit)?;
    Ok((fit.model, fit.history))
}

/// Two-stage training: fit `round(p·n)`-flipped labels first, then continue
/// from those weights on the clean labels.
///
/// Returns the final model, the joint history and the stage-1 model.
pub fn train_noisy_pretrain(
    train: &Dataset,
    test: &Dataset,
    arch: &[usize],
    cfg: &TrainConfig,
) -> Result<(Mlp, RunHistory, Mlp)> {
    let fit = fit(Regime::NoisyPretrain, train, test, arch, cfg)?;
    into_result(&fit)?;
    let stage1 = fit.stage1.expect("noisy regime keeps stage-1 weights");
    Ok((fit.model, fit.history, stage1))
}

fn into_result(fit: &Fit) -> Result<()> {
    match fit.history.status {
        RunStatus::Diverged { stage, epoch } => Err(Error::Divergence { stage: stage.to_string(), epoch }),
        _ => Ok(()),
    }
}

/// Train under `regime`; divergence is reported through the history status
/// rather than as an error. Smoothed regimes use `cfg.eps` in every stage,
/// the others train on hard targets.
pub fn fit(regime: Regime, train: &Dataset, test: &Dataset, arch: &[usize], cfg: &TrainConfig) -> Result<Fit> {
    cfg.validate()?;
    if arch.first() != Some(&train.dim()) || train.dim() != test.dim() {
        return Err(Error::Shape(format!(
            "architecture input {:?} vs train {} / test {} features",
            arch.first(),
            train.dim(),
            test.dim()
        )));
    }
    if arch.last() != Some(&2) {
        return Err(Error::Shape("binary tasks need 2 outputs".into()));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Shape("empty train or test set".into()));
    }
    let eps = if regime.is_smoothed() { cfg.eps } else { 0.0 };
    let mut model = mlp_init(arch, seed::derive(cfg.seed, seed::TAG_INIT))?;
    let mut history = RunHistory::new();

    if !regime.is_noisy() {
        let end = run_stage(&mut model, train, &train.labels, test, cfg, eps, Stage::Standard, &mut history)?;
        history.status = end;
        return Ok(Fit { model, history, stage1: None, noisy_labels: None });
    }

    let p = cfg
        .p
        .ok_or_else(|| Error::Config("noisy pre-training needs a corruption fraction".into()))?;
    let noisy = flip_labels(&train.labels, p, seed::derive(cfg.seed, seed::TAG_NOISE))?;
    let end = run_stage(&mut model, train, &noisy, test, cfg, eps, Stage::NoisyStage1, &mut history)?;
    if let RunStatus::Diverged { .. } = end {
        history.status = end;
        return Ok(Fit { model, history, stage1: None, noisy_labels: Some(noisy) });
    }
    history.stage1_reached = Some(end == RunStatus::Converged);
    let stage1 = model.clone();
    let end = run_stage(&mut model, train, &train.labels, test, cfg, eps, Stage::CleanStage2, &mut history)?;
    history.status = end;
    Ok(Fit { model, history, stage1: Some(stage1), noisy_labels: Some(noisy) })
}

/// Run SGD epochs on `labels` until the stage threshold or cap.
#[allow(clippy::too_many_arguments)]
fn run_stage(
    model: &mut Mlp,
    train: &Dataset,
    labels: &[u8],
    test: &Dataset,
    cfg: &TrainConfig,
    eps: f64,
    stage: Stage,
    history: &mut RunHistory,
) -> Result<RunStatus> {
    let (cap, stop) = match stage {
        Stage::NoisyStage1 => (cfg.stage1_epochs, cfg.stage1_stop_acc),
        _ => (cfg.epochs, cfg.stop_train_acc),
    };
    let n = train.len();
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rows: Vec<&[f64]> = Vec::with_capacity(batch);
    let mut targets: Vec<u8> = Vec::with_capacity(batch);
    let mut scratch = Scratch::default();

    for _ in 0..cap {
        let epoch = history.next_epoch();
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::derive_indexed(cfg.seed, seed::TAG_EPOCH, epoch as u64)));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch) {
            rows.clear();
            targets.clear();
            rows.extend(chunk.iter().map(|&i| train.row(i)));
            targets.extend(chunk.iter().map(|&i| labels[i]));
            let (loss, grads) = backward(model, &rows, &targets, eps)?;
            if !loss.is_finite() {
                return Ok(RunStatus::Diverged { stage, epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            sgd_step(model, &grads, cfg.lr)?;
        }

        let (mut hit_stage, mut hit_clean) = (0usize, 0usize);
        for i in 0..n {
            let pred = model.predict_with(train.row(i), &mut scratch);
            hit_stage += usize::from(pred == labels[i]);
            hit_clean += usize::from(pred == train.labels[i]);
        }
        let acc_test = model.accuracy(&test.features, &test.labels)?;
        let record = EpochRecord {
            stage,
            epoch,
            loss: loss_sum / n as f64,
            acc_stage_labels: hit_stage as f64 / n as f64,
            acc_clean: hit_clean as f64 / n as f64,
            acc_test,
        };
        let reached = record.acc_stage_labels >= stop;
        history.records.push(record);
        if reached && history.records.len() >= cfg.min_epochs {
            return Ok(RunStatus::Converged);
        }
    }
    Ok(RunStatus::CapReached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_slab, SlabSpec};

    fn slab(n: usize, seed: u64) -> Dataset {
        gen_slab(&SlabSpec { n, seed, ..SlabSpec::default() }).unwrap()
    }

    fn cfg(seed: u64) -> TrainConfig {
        TrainConfig { epochs: 3, stage1_epochs: 2, seed, ..TrainConfig::default() }
    }

    #[test]
    fn zero_epochs_returns_init() {
        let ds = slab(100, 1);
        let c = TrainConfig { epochs: 0, ..cfg(5) };
        let (m, h) = train_standard(&ds, &ds, &[4, 8, 2], &c).unwrap();
        assert_eq!(m, mlp_init(&[4, 8, 2], seed::derive(5, seed::TAG_INIT)).unwrap());
        assert!(h.records.is_empty());
        assert_eq!(h.status, RunStatus::CapReached);
    }

    #[test]
    fn min_epochs_delays_stopping() {
        let ds = slab(200, 3);
        let c = TrainConfig { epochs: 40, stop_train_acc: 0.5, ..cfg(2) };
        let (_, h) = train_standard(&ds, &ds, &[4, 16, 2], &c).unwrap();
        assert!(h.records.len() < 7 && h.status == RunStatus::Converged);
        let (_, h) = train_standard(&ds, &ds, &[4, 16, 2], &TrainConfig { min_epochs: 7, ..c }).unwrap();
        assert_eq!((h.records.len(), h.status), (7, RunStatus::Converged));
        // the floor counts stage-1 epochs too
        let c = TrainConfig { p: Some(0.1), stage1_epochs: 2, stage1_stop_acc: 0.5, min_epochs: 6, ..c };
        let (_, h, _) = train_noisy_pretrain(&ds, &ds, &[4, 16, 2], &c).unwrap();
        assert_eq!(h.stage_records(Stage::NoisyStage1).count(), 2);
        assert_eq!(h.stage_records(Stage::CleanStage2).count(), 4);
    }

    #[test]
    fn epochs_numbered_across_stages() {
        let ds = slab(200, 2);
        let c = TrainConfig { p: Some(0.1), stage1_stop_acc: 1.0, stop_train_acc: 1.0, ..cfg(1) };
        let (_, h, _) = train_noisy_pretrain(&ds, &ds, &[4, 8, 2], &c).unwrap();
        let epochs: Vec<usize> = h.records.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, (1..=epochs.len()).collect::<Vec<_>>());
        assert_eq!(h.stage_records(Stage::NoisyStage1).count(), 2);
        assert!(h.stage_records(Stage::CleanStage2).count() >= 1);
        assert_eq!(h.stage1_reached, Some(false));
    }

    #[test]
    fn stage_two_starts_from_stage_one() {
        let ds = slab(200, 3);
        let c = TrainConfig { p: Some(0.2), epochs: 0, ..cfg(4) };
        let (m, h, s1) = train_noisy_pretrain(&ds, &ds, &[4, 8, 2], &c).unwrap();
        assert_eq!(m, s1);
        assert!(h.records.iter().all(|r| r.stage == Stage::NoisyStage1));
    }

    #[test]
    fn noise_masks_differ_by_seed() {
        let ds = slab(300, 4);
        let c = TrainConfig { p: Some(0.1), epochs: 0, stage1_epochs: 0, ..cfg(0) };
        let a = fit(Regime::NoisyPretrain, &ds, &ds, &[4, 2], &TrainConfig { seed: 1, ..c.clone() }).unwrap();
        let b = fit(Regime::NoisyPretrain, &ds, &ds, &[4, 2], &TrainConfig { seed: 2, ..c }).unwrap();
        let (na, nb) = (a.noisy_labels.unwrap(), b.noisy_labels.unwrap());
        let flips = |n: &[u8]| n.iter().zip(&ds.labels).filter(|(x, y)| x != y).count();
        assert_eq!(flips(&na), 30);
        assert_eq!(flips(&nb), 30);
        assert!(na.iter().zip(&nb).any(|(x, y)| x != y));
    }

    #[test]
    fn deterministic() {
        let ds = slab(150, 5);
        let a = train_standard(&ds, &ds, &[4, 6, 2], &cfg(9)).unwrap();
        let b = train_standard(&ds, &ds, &[4, 6, 2], &cfg(9)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn divergence_reported() {
        let ds = slab(100, 6);
        let c = TrainConfig { lr: 1e300, epochs: 5, ..cfg(1) };
        match train_standard(&ds, &ds, &[4, 16, 2], &c) {
            Err(Error::Divergence { stage, epoch }) => {
                assert_eq!(stage, "standard");
                assert!(epoch >= 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = slab(50, 7);
        assert!(train_standard(&ds, &ds, &[3, 2], &cfg(0)).is_err());
        assert!(train_standard(&ds, &ds, &[4, 3], &cfg(0)).is_err());
        assert!(train_noisy_pretrain(&ds, &ds, &[4, 2], &cfg(0)).is_err());
        let bad = TrainConfig { p: Some(0.6), ..cfg(0) };
        assert!(train_noisy_pretrain(&ds, &ds, &[4, 2], &bad).is_err());
    }

    #[test]
    fn separable_blobs_fit_quickly() {
        use rand::Rng;
        use crate::datagen::{Block, DatasetMeta};
        use crate::linalg::Matrix;
        // two uniform blobs around (±1, ±1) with a wide gap
        let mut rng = seed::rng(11);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let c = (i % 2) as u8;
            let s = if c == 1 { 1.0 } else { -1.0 };
            rows.push(vec![s + rng.random_range(-0.5..0.5), s + rng.random_range(-0.5..0.5)]);
            labels.push(c);
        }
        // perceptron oracle: separable data converges to zero mistakes
        let (mut w, mut b) = ([0.0f64; 2], 0.0f64);
        let mut clean_pass = false;
        for _ in 0..1000 {
            let mut mistakes = 0;
            for (x, &y) in rows.iter().zip(&labels) {
                let t = if y == 1 { 1.0 } else { -1.0 };
                if t * (w[0] * x[0] + w[1] * x[1] + b) <= 0.0 {
                    w[0] += t * x[0];
                    w[1] += t * x[1];
                    b += t;
                    mistakes += 1;
                }
            }
            if mistakes == 0 {
                clean_pass = true;
                break;
            }
        }
        assert!(clean_pass);
        let ds = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            None,
            vec![Block::new("all", 0, 2)],
            DatasetMeta::for_generator("test", serde_json::json!({}), 0),
        )
        .unwrap();
        let c = TrainConfig { epochs: 50, ..cfg(3) };
        let (_, h) = train_standard(&ds, &ds, &[2, 8, 2], &c).unwrap();
        assert_eq!(h.status, RunStatus::Converged);
        assert_eq!(h.last().unwrap().acc_clean, 1.0);
    }
}
