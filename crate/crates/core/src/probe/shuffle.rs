use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mean_std;
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::nnet::{Mlp, Scratch};
use crate::seed;

pub const DEFAULT_SHUFFLE_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleResult {
    pub block: String,
    pub repeats: usize,
    pub per_repeat: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub baseline: f64,
}

/// Accuracy after replacing one block of every test row with the same block
/// of a randomly permuted row, averaged over `repeats` seeded permutations.
pub fn shuffle_accuracy(
    model: &Mlp,
    ds: &Dataset,
    block: &str,
    repeats: usize,
    seed: u64,
) -> Result<ShuffleResult> {
    if repeats == 0 {
        return Err(Error::Config("shuffle needs at least one repeat".into()));
    }
    let perms: Vec<Vec<usize>> = (0..repeats)
        .map(|r| {
            let mut rng = seed::rng(seed::derive_indexed(seed, seed::TAG_SHUFFLE, r as u64));
            let mut p: Vec<usize> = (0..ds.len()).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    shuffle_accuracy_with(model, ds, block, &perms)
}

/// Shuffle accuracy under caller-supplied row permutations.
///
/// On projected datasets the block is swapped in generator coordinates and
/// the row is re-projected before evaluation.
pub fn shuffle_accuracy_with(
    model: &Mlp,
    ds: &Dataset,
    block: &str,
    perms: &[Vec<usize>],
) -> Result<ShuffleResult> {
    let cols = ds.block(block)?.columns();
    if ds.dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "dataset has {} features, model expects {}",
            ds.dim(),
            model.input_dim()
        )));
    }
    if perms.is_empty() {
        return Err(Error::Config("shuffle needs at least one permutation".into()));
    }
    let n = ds.len();
    for p in perms {
        let mut seen = vec![false; n];
        if p.len() != n || !p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Config("row permutation is not a permutation of the test rows".into()));
        }
    }
    let baseline = model.accuracy(&ds.features, &ds.labels)?;
    let projection = ds.projection();
    let original = projection.map(|_| ds.original_features());
    let source = original.as_ref().unwrap_or(&ds.features);

    let mut scratch = Scratch::default();
    let mut row = vec![0.0; ds.dim()];
    let per_repeat: Vec<f64> = perms
        .iter()
        .map(|perm| {
            let correct = (0..n)
                .filter(|&i| {
                    row.copy_from_slice(source.row(i));
                    row[cols.clone()].copy_from_slice(&source.row(perm[i])[cols.clone()]);
                    let pred = match projection {
                        Some(q) => model.predict_with(&q.project_row(&row), &mut scratch),
                        None => model.predict_with(&row, &mut scratch),
                    };
                    pred == ds.labels[i]
                })
                .count();
            correct as f64 / n as f64
        })
        .collect();
    let (mean, std) = mean_std(&per_repeat);
    Ok(ShuffleResult {
        block: block.to_string(),
        repeats: per_repeat.len(),
        per_repeat,
        mean,
        std,
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_slab, SlabSpec};
    use crate::linalg::Matrix;
    use crate::nnet::{mlp_init, Dense};

    fn slab(project: bool) -> Dataset {
        gen_slab(&SlabSpec { n: 400, seed: 2, project, ..SlabSpec::default() }).unwrap()
    }

    #[test]
    fn identity_permutation_equals_baseline() {
        let ds = slab(false);
        let m = mlp_init(&[4, 8, 2], 1).unwrap();
        let id: Vec<usize> = (0..ds.len()).collect();
        let r = shuffle_accuracy_with(&m, &ds, "feature-2", &[id]).unwrap();
        assert_eq!(r.per_repeat[0], r.baseline);
        assert_eq!(r.baseline, m.accuracy(&ds.features, &ds.labels).unwrap());
    }

    #[test]
    fn identity_permutation_on_projected_data() {
        let ds = slab(true);
        let m = mlp_init(&[4, 8, 2], 1).unwrap();
        let id: Vec<usize> = (0..ds.len()).collect();
        let r = shuffle_accuracy_with(&m, &ds, "feature-1", &[id]).unwrap();
        // re-projection round-off can only move points within ~1e-16
        assert!((r.per_repeat[0] - r.baseline).abs() <= 1.0 / ds.len() as f64);
    }

    #[test]
    fn ignored_block_keeps_baseline() {
        let ds = slab(false);
        let mut m = mlp_init(&[4, 8, 2], 3).unwrap();
        for h in 0..8 {
            m.layers[0].w[(h, 2)] = 0.0;
        }
        let r = shuffle_accuracy(&m, &ds, "feature-3", 5, 9).unwrap();
        assert!(r.per_repeat.iter().all(|&a| a == r.baseline));
        assert_eq!(r.std, 0.0);
    }

    #[test]
    fn threshold_on_feature1_collapses_to_chance() {
        let ds = gen_slab(&SlabSpec { n: 4000, seed: 4, ..SlabSpec::default() }).unwrap();
        let m = Mlp::new(vec![Dense {
            w: Matrix::from_rows(&[vec![-1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]]).unwrap(),
            b: vec![0.0, 0.0],
        }])
        .unwrap();
        let r = shuffle_accuracy(&m, &ds, "feature-1", 10, 1).unwrap();
        assert_eq!(r.baseline, 1.0);
        assert!((r.mean - 0.5).abs() < 0.03, "{}", r.mean);
        let r2 = shuffle_accuracy(&m, &ds, "feature-2", 3, 1).unwrap();
        assert_eq!(r2.mean, 1.0);
    }

    #[test]
    fn errors() {
        let ds = slab(false);
        let m = mlp_init(&[4, 2], 0).unwrap();
        assert!(matches!(shuffle_accuracy(&m, &ds, "nope", 1, 0), Err(Error::UnknownBlock(_))));
        assert!(shuffle_accuracy(&m, &ds, "feature-1", 0, 0).is_err());
        assert!(shuffle_accuracy_with(&m, &ds, "feature-1", &[vec![0; ds.len()]]).is_err());
    }
}
