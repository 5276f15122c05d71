use rand::seq::index::sample;

use super::dataset::{CorruptionRecord, Dataset};
use crate::error::{Error, Result};
use crate::seed;

/// Copy of `ds` with exactly `round(p·n)` labels flipped, chosen uniformly
/// without replacement.
pub fn corrupt_labels(ds: &Dataset, p: f64, seed: u64) -> Result<Dataset> {
    let labels = flip_labels(&ds.labels, p, seed)?;
    let mut out = ds.clone();
    out.labels = labels;
    out.meta.corruptions.push(CorruptionRecord {
        fraction: p,
        seed,
        flipped: flip_count(ds.len(), p),
    });
    Ok(out)
}

/// The label vector `corrupt_labels` would produce, without copying features.
pub fn flip_labels(labels: &[u8], p: f64, seed: u64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("corruption fraction {p} outside [0, 1]")));
    }
    let n = labels.len();
    let mut out = labels.to_vec();
    let mut rng = seed::rng(seed);
    for i in sample(&mut rng, n, flip_count(n, p)).into_iter() {
        out[i] = 1 - out[i];
    }
    Ok(out)
}

fn flip_count(n: usize, p: f64) -> usize {
    (p * n as f64).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_slab, SlabSpec};
    use proptest::prelude::*;

    fn data(n: usize) -> Dataset {
        gen_slab(&SlabSpec { n, seed: 1, ..SlabSpec::default() }).unwrap()
    }

    fn hamming(a: &Dataset, b: &Dataset) -> usize {
        a.labels.iter().zip(&b.labels).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn zero_fraction_is_identity() {
        let ds = data(50);
        assert_eq!(corrupt_labels(&ds, 0.0, 3).unwrap().labels, ds.labels);
    }

    #[test]
    fn ten_percent_of_ten_flips_one() {
        let ds = data(10);
        assert_eq!(hamming(&ds, &corrupt_labels(&ds, 0.10, 3).unwrap()), 1);
    }

    #[test]
    fn full_flip_is_involution() {
        let ds = data(40);
        let once = corrupt_labels(&ds, 1.0, 3).unwrap();
        assert_eq!(hamming(&ds, &once), 40);
        let twice = corrupt_labels(&once, 1.0, 8).unwrap();
        assert_eq!(twice.labels, ds.labels);
        assert_eq!(twice.features, ds.features);
        assert_eq!(twice.meta.corruptions.len(), 2);
    }

    #[test]
    fn out_of_range_fraction() {
        assert!(corrupt_labels(&data(5), 1.5, 0).is_err());
        assert!(corrupt_labels(&data(5), -0.1, 0).is_err());
    }

    proptest! {
        #[test]
        fn exact_flip_count_and_determinism(n in 1usize..300, p in 0.0f64..=1.0, s in any::<u64>()) {
            let ds = data(n);
            let a = corrupt_labels(&ds, p, s).unwrap();
            let b = corrupt_labels(&ds, p, s).unwrap();
            prop_assert_eq!(hamming(&ds, &a), (p * n as f64).round() as usize);
            prop_assert_eq!(&a.labels, &b.labels);
            prop_assert_eq!(&a.features, &ds.features);
        }
    }
}
