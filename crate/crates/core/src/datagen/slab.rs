use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Block, Dataset, DatasetMeta, Projection};
use super::orthogonal::random_orthogonal;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

/// Generative parameters of the multi-slab dataset.
///
/// Coordinate 1 is linearly separable at 0: class 0 on `[-1, -linear_margin]`,
/// class 1 on `[linear_margin, 1]`. Coordinate `j ≥ 2` splits `[-1, 1]`
/// into `k[j-2]` equal slabs with alternating class ownership; samples keep
/// a distance of at least `margin` from every slab boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlabSpec {
    pub d: usize,
    pub k: Vec<usize>,
    pub n: usize,
    pub margin: f64,
    pub linear_margin: f64,
    pub noise_frac: f64,
    pub project: bool,
    pub seed: u64,
}

impl Default for SlabSpec {
    fn default() -> Self {
        Self {
            d: 4,
            k: vec![3, 5, 7],
            n: 50_000,
            margin: 0.05,
            linear_margin: 0.05,
            noise_frac: 0.0,
            project: false,
            seed: 0,
        }
    }
}

impl SlabSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Spec(format!("d must be at least 2, got {}", self.d)));
        }
        if self.k.len() != self.d - 1 {
            return Err(Error::Spec(format!(
                "need {} slab counts for d = {}, got {}",
                self.d - 1,
                self.d,
                self.k.len()
            )));
        }
        if let Some(bad) = self.k.iter().find(|&&k| k < 3 || k % 2 == 0) {
            return Err(Error::Spec(format!("slab count {bad} must be odd and at least 3")));
        }
        if self.n == 0 {
            return Err(Error::Spec("n must be positive".into()));
        }
        if !(0.0..=0.2).contains(&self.margin) {
            return Err(Error::Spec(format!("margin {} outside [0, 0.2]", self.margin)));
        }
        if let Some(bad) = self.k.iter().find(|&&k| self.margin * k as f64 >= 1.0) {
            return Err(Error::Spec(format!(
                "margin {} leaves no room inside {bad} slabs",
                self.margin
            )));
        }
        if !(0.0..0.5).contains(&self.linear_margin) {
            return Err(Error::Spec(format!("linear_margin {} outside [0, 0.5)", self.linear_margin)));
        }
        if !(0.0..=1.0).contains(&self.noise_frac) {
            return Err(Error::Spec(format!("noise_frac {} outside [0, 1]", self.noise_frac)));
        }
        Ok(())
    }
}

/// Index of the slab containing `v` among `k` equal slabs on `[-1, 1]`.
pub fn slab_index(v: f64, k: usize) -> usize {
    let w = 2.0 / k as f64;
    (((v + 1.0) / w).floor().max(0.0) as usize).min(k - 1)
}

pub fn gen_slab(spec: &SlabSpec) -> Result<Dataset> {
    spec.validate()?;
    let SlabSpec { d, n, margin, .. } = *spec;
    let mut rng = seed::rng(spec.seed);

    // Class owning slab 0 (and, k being odd, the last slab) per coordinate.
    let outer: Vec<u8> = spec.k.iter().map(|_| rng.random_range(0..2u8)).collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();

    let mut x = Matrix::zeros(n, d);
    for (i, &y) in labels.iter().enumerate() {
        x[(i, 0)] = if y == 0 {
            rng.random_range(-1.0..=-spec.linear_margin)
        } else {
            rng.random_range(spec.linear_margin..=1.0)
        };
        for (j, (&k, &o)) in spec.k.iter().zip(&outer).enumerate() {
            // Slabs owned by class y: indices with (o + idx) % 2 == y.
            let first = usize::from(o != y);
            let owned = (k - first).div_ceil(2);
            let slab = first + 2 * rng.random_range(0..owned);
            let w = 2.0 / k as f64;
            let lo = -1.0 + slab as f64 * w + margin;
            let hi = -1.0 + (slab + 1) as f64 * w - margin;
            x[(i, j + 1)] = rng.random_range(lo..=hi);
        }
    }

    let noisy = (spec.noise_frac * n as f64).round() as usize;
    if noisy > 0 {
        let mut noise_rng = seed::rng(seed::derive(spec.seed, "slab-noise"));
        for i in sample(&mut noise_rng, n, noisy).into_iter() {
            x[(i, 0)] = noise_rng.random_range(-1.0..=1.0);
        }
    }

    let params = serde_json::to_value(spec)?;
    let mut meta = DatasetMeta::for_generator("multi-slab", params, spec.seed);
    if let serde_json::Value::Object(map) = &mut meta.params {
        map.insert("outer_classes".into(), serde_json::to_value(&outer)?);
    }
    if noisy > 0 {
        meta.notes.push(format!(
            "noise: feature-1 of {noisy} samples resampled from Uniform[-1,1] independent of label"
        ));
    }

    let features = if spec.project {
        let q = random_orthogonal(d, seed::derive(spec.seed, "projection"))?;
        meta.projection = Some(Projection::from_matrix(&q));
        meta.notes.push(
            "features are x·Q for generator coordinates x; blocks name generator coordinates".into(),
        );
        x.matmul(&q)?
    } else {
        x
    };

    let blocks = (0..d)
        .map(|j| Block::new(format!("feature-{}", j + 1), j, j + 1))
        .collect();
    Dataset::new(features, labels, None, blocks, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outer(ds: &Dataset) -> Vec<u8> {
        serde_json::from_value(ds.meta.params["outer_classes"].clone()).unwrap()
    }

    fn base(n: usize, seed: u64) -> SlabSpec {
        SlabSpec { n, seed, ..SlabSpec::default() }
    }

    #[test]
    fn feature1_threshold_is_perfect() {
        let ds = gen_slab(&base(50_000, 1)).unwrap();
        let correct = (0..ds.len())
            .filter(|&i| u8::from(ds.row(i)[0] > 0.0) == ds.labels[i] || ds.row(i)[0] == 0.0)
            .count();
        assert_eq!(correct, ds.len());
    }

    #[test]
    fn feature2_three_piece_rule_is_perfect() {
        let ds = gen_slab(&base(50_000, 2)).unwrap();
        let o = outer(&ds)[0];
        for i in 0..ds.len() {
            let v = ds.row(i)[1];
            // outer slabs (v < -1/3 or v > 1/3) belong to class o
            let pred = if v.abs() > 1.0 / 3.0 { o } else { 1 - o };
            assert_eq!(pred, ds.labels[i], "row {i} value {v}");
        }
    }

    #[test]
    fn margin_bands_are_empty() {
        let spec = SlabSpec { d: 2, k: vec![3], n: 1000, margin: 0.1, seed: 5, ..SlabSpec::default() };
        let ds = gen_slab(&spec).unwrap();
        let boundaries = [-1.0 / 3.0, 1.0 / 3.0];
        let band = 0.1 * (2.0 / 3.0) / 2.0;
        for i in 0..ds.len() {
            let v = ds.row(i)[1];
            for b in boundaries {
                assert!((v - b).abs() >= band, "row {i}: {v} inside band around {b}");
                // the implemented exclusion is the full margin
                assert!((v - b).abs() >= 0.1 - 1e-12);
            }
        }
    }

    #[test]
    fn every_sample_sits_in_an_owned_slab() {
        let spec = SlabSpec { n: 5000, margin: 0.02, seed: 9, ..SlabSpec::default() };
        let ds = gen_slab(&spec).unwrap();
        let o = outer(&ds);
        for i in 0..ds.len() {
            let y = ds.labels[i];
            let r = ds.row(i);
            assert!(if y == 0 { r[0] <= 0.0 } else { r[0] >= 0.0 });
            for (j, &k) in spec.k.iter().enumerate() {
                let v = r[j + 1];
                let w = 2.0 / k as f64;
                // brute force: scan every slab and find the one containing v
                let owner = (0..k)
                    .find(|&s| {
                        let lo = -1.0 + s as f64 * w;
                        v >= lo + spec.margin - 1e-12 && v <= lo + w - spec.margin + 1e-12
                    })
                    .map(|s| (o[j] as usize + s) % 2)
                    .expect("value inside some slab interior");
                assert_eq!(owner as u8, y);
            }
        }
    }

    #[test]
    fn noise_touches_exact_count() {
        let clean = gen_slab(&SlabSpec { n: 1000, seed: 3, ..SlabSpec::default() }).unwrap();
        let noisy =
            gen_slab(&SlabSpec { n: 1000, seed: 3, noise_frac: 0.05, ..SlabSpec::default() }).unwrap();
        let changed = (0..1000).filter(|&i| clean.row(i)[0] != noisy.row(i)[0]).count();
        assert_eq!(changed, 50);
        assert_eq!(clean.labels, noisy.labels);
    }

    #[test]
    fn projection_is_recoverable() {
        let plain = gen_slab(&SlabSpec { n: 500, seed: 4, ..SlabSpec::default() }).unwrap();
        let proj =
            gen_slab(&SlabSpec { n: 500, seed: 4, project: true, ..SlabSpec::default() }).unwrap();
        let q = proj.projection().unwrap().matrix();
        let back = proj.features.matmul(&q.transpose()).unwrap();
        let err = back.sub(&plain.features).unwrap().as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            SlabSpec { d: 1, k: vec![], ..SlabSpec::default() },
            SlabSpec { k: vec![3, 4, 7], ..SlabSpec::default() },
            SlabSpec { k: vec![1, 5, 7], ..SlabSpec::default() },
            SlabSpec { k: vec![3, 5], ..SlabSpec::default() },
            SlabSpec { margin: 0.15, k: vec![3, 5, 7], ..SlabSpec::default() },
            SlabSpec { margin: 0.3, ..SlabSpec::default() },
            SlabSpec { noise_frac: 1.5, ..SlabSpec::default() },
            SlabSpec { n: 0, ..SlabSpec::default() },
        ];
        for s in bad {
            assert!(matches!(gen_slab(&s), Err(Error::Spec(_))), "{s:?}");
        }
    }

    #[test]
    fn slab_index_edges() {
        assert_eq!(slab_index(-1.0, 3), 0);
        assert_eq!(slab_index(1.0, 3), 2);
        assert_eq!(slab_index(0.0, 3), 1);
    }

    #[test]
    fn linear_margin_band_is_empty() {
        let ds = gen_slab(&SlabSpec { n: 5000, linear_margin: 0.1, seed: 12, ..SlabSpec::default() }).unwrap();
        assert!((0..ds.len()).all(|i| ds.row(i)[0].abs() >= 0.1));
        let flat = gen_slab(&SlabSpec { n: 5000, linear_margin: 0.0, seed: 12, ..SlabSpec::default() }).unwrap();
        assert!((0..flat.len()).any(|i| flat.row(i)[0].abs() < 0.01));
        assert!(gen_slab(&SlabSpec { n: 10, linear_margin: 0.5, ..SlabSpec::default() }).is_err());
    }
}
