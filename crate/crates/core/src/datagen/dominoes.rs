use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{Block, Dataset, DatasetMeta};
use super::images::{to_grayscale_28, ImageSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

pub const DOMINO_TOP: &str = "top";
pub const DOMINO_BOTTOM: &str = "bottom";
const BLOCK_PIXELS: usize = 28 * 28;

/// Agreement between one block's class identity and the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub rho: f64,
    /// Block whose class only agrees with the label on `round(rho·n)` rows;
    /// the other block defines the label.
    pub target_block: String,
}

impl CorrelationSpec {
    pub fn top(rho: f64) -> Self {
        Self {
            rho,
            target_block: DOMINO_TOP.to_string(),
        }
    }
}

/// Collate a top and a bottom 28×28 block into 56×28 binary-class images.
///
/// Class pair `(a, b)` maps `a` to class 0 and `b` to class 1. Labels are
/// balanced (`n/2` zeros), exactly `round(rho·n)` rows have correlated-block
/// class equal to the label, and source images are drawn without
/// replacement per class.
pub fn build_dominoes(
    top: &ImageSet,
    top_classes: (&str, &str),
    bottom: &ImageSet,
    bottom_classes: (&str, &str),
    corr: &CorrelationSpec,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(0.5..=1.0).contains(&corr.rho) {
        return Err(Error::Config(format!("rho {} outside [0.5, 1]", corr.rho)));
    }
    let correlated_is_top = match corr.target_block.as_str() {
        DOMINO_TOP => true,
        DOMINO_BOTTOM => false,
        other => return Err(Error::UnknownBlock(other.to_string())),
    };
    if n == 0 {
        return Err(Error::Config("dominoes need n > 0".into()));
    }
    let top_ids = [
        top.vocabulary.resolve(top_classes.0)?,
        top.vocabulary.resolve(top_classes.1)?,
    ];
    let bottom_ids = [
        bottom.vocabulary.resolve(bottom_classes.0)?,
        bottom.vocabulary.resolve(bottom_classes.1)?,
    ];
    if top_ids[0] == top_ids[1] || bottom_ids[0] == bottom_ids[1] {
        return Err(Error::Config("class pairs must name two distinct classes".into()));
    }

    let mut rng = seed::rng(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
    labels.shuffle(&mut rng);
    let agree = (corr.rho * n as f64).round() as usize;
    let mut agrees = vec![false; n];
    for i in sample(&mut rng, n, agree).into_iter() {
        agrees[i] = true;
    }
    let correlated_class: Vec<u8> = (0..n)
        .map(|i| if agrees[i] { labels[i] } else { 1 - labels[i] })
        .collect();
    let (top_class, bottom_class) = if correlated_is_top {
        (&correlated_class, &labels)
    } else {
        (&labels, &correlated_class)
    };

    let top_pick = draw_sources(top, top_ids, top_class, "top", &mut rng)?;
    let bottom_pick = draw_sources(bottom, bottom_ids, bottom_class, "bottom", &mut rng)?;

    let mut features = Matrix::zeros(n, 2 * BLOCK_PIXELS);
    for i in 0..n {
        let t = grayscale(top, top_pick[i])?;
        let b = grayscale(bottom, bottom_pick[i])?;
        let row = features.row_mut(i);
        row[..BLOCK_PIXELS].copy_from_slice(&t);
        row[BLOCK_PIXELS..].copy_from_slice(&b);
    }

    let params = serde_json::json!({
        "top": { "source": top.vocabulary, "classes": [top_classes.0, top_classes.1] },
        "bottom": { "source": bottom.vocabulary, "classes": [bottom_classes.0, bottom_classes.1] },
        "correlation": corr,
        "n": n,
        "layout": "56x28 row-major, top block rows 0..28",
    });
    let mut meta = DatasetMeta::for_generator("dominoes", params, seed);
    meta.notes.push(format!(
        "{agree} of {n} rows have {} class equal to the label",
        corr.target_block
    ));
    if top.channels == 3 || bottom.channels == 3 {
        meta.notes.push("RGB sources converted to luminance, then center-cropped 32x32 -> 28x28".into());
    }
    Dataset::new(
        features,
        labels,
        None,
        vec![
            Block::new(DOMINO_TOP, 0, BLOCK_PIXELS),
            Block::new(DOMINO_BOTTOM, BLOCK_PIXELS, 2 * BLOCK_PIXELS),
        ],
        meta,
    )
}

fn grayscale(set: &ImageSet, i: usize) -> Result<Vec<f64>> {
    to_grayscale_28(set.image(i), set.height, set.width, set.channels)
}

/// For every row, the index of a distinct source image of the requested class.
fn draw_sources(
    set: &ImageSet,
    ids: [u8; 2],
    classes: &[u8],
    which: &str,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<usize>> {
    let mut pools: Vec<Vec<usize>> = ids.iter().map(|&id| set.indices_of(id)).collect();
    for (c, pool) in pools.iter_mut().enumerate() {
        let need = classes.iter().filter(|&&k| k as usize == c).count();
        if pool.len() < need {
            return Err(Error::InsufficientImages(format!(
                "{which} class {} has {} images, {need} required",
                ids[c],
                pool.len()
            )));
        }
        pool.shuffle(rng);
        pool.truncate(need);
    }
    let mut cursor = [0usize; 2];
    Ok(classes
        .iter()
        .map(|&k| {
            let c = k as usize;
            cursor[c] += 1;
            pools[c][cursor[c] - 1]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Vocabulary;

    /// Synthetic source whose pixel values encode the class id, so block
    /// classes can be read back from the features.
    fn source(per_class: usize, vocabulary: Vocabulary) -> ImageSet {
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for class in 0..10u8 {
            for _ in 0..per_class {
                pixels.extend(std::iter::repeat_n(f64::from(class) / 10.0, 784));
                labels.push(class);
            }
        }
        ImageSet { height: 28, width: 28, channels: 1, pixels, labels, vocabulary }
    }

    fn block_class(ds: &Dataset, i: usize, start: usize) -> u8 {
        (ds.row(i)[start] * 10.0).round() as u8
    }

    fn agreement(rho: f64, n: usize) -> usize {
        let top = source(n, Vocabulary::Mnist);
        let bottom = source(n, Vocabulary::FashionMnist);
        let ds = build_dominoes(&top, ("0", "1"), &bottom, ("coat", "dress"), &CorrelationSpec::top(rho), n, 11)
            .unwrap();
        (0..n).filter(|&i| block_class(&ds, i, 0) == ds.labels[i]).count()
    }

    #[test]
    fn exact_agreement_counts() {
        assert_eq!(agreement(1.0, 1000), 1000);
        assert_eq!(agreement(0.95, 1000), 950);
        assert_eq!(agreement(0.5, 1000), 500);
    }

    #[test]
    fn label_follows_bottom_block() {
        let top = source(600, Vocabulary::Mnist);
        let bottom = source(600, Vocabulary::FashionMnist);
        let ds = build_dominoes(&top, ("0", "1"), &bottom, ("coat", "dress"), &CorrelationSpec::top(0.95), 1000, 2)
            .unwrap();
        assert_eq!(ds.dim(), 1568);
        assert_eq!(ds.block("top").unwrap().columns(), 0..784);
        assert_eq!(ds.block("bottom").unwrap().columns(), 784..1568);
        for i in 0..ds.len() {
            let expect = if ds.labels[i] == 0 { 4 } else { 3 };
            assert_eq!(block_class(&ds, i, 784), expect);
        }
        assert_eq!(ds.labels.iter().filter(|&&l| l == 0).count(), 500);
    }

    #[test]
    fn draws_without_replacement() {
        // Distinct pixel content per image to detect reuse.
        let mut top = source(600, Vocabulary::Mnist);
        for i in 0..top.len() {
            top.pixels[i * 784 + 1] = i as f64 / 1e4;
        }
        let bottom = source(600, Vocabulary::Mnist);
        let ds = build_dominoes(&top, ("0", "1"), &bottom, ("7", "9"), &CorrelationSpec::top(0.95), 1000, 5)
            .unwrap();
        let mut seen: Vec<u64> = (0..ds.len()).map(|i| ds.row(i)[1].to_bits()).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 1000);
    }

    #[test]
    fn errors() {
        let top = source(100, Vocabulary::Mnist);
        let bottom = source(100, Vocabulary::FashionMnist);
        let c = CorrelationSpec::top(1.0);
        assert!(matches!(
            build_dominoes(&top, ("0", "1"), &bottom, ("coat", "dress"), &c, 1000, 1),
            Err(Error::InsufficientImages(_))
        ));
        assert!(matches!(
            build_dominoes(&top, ("0", "1"), &bottom, ("coat", "jacket"), &c, 10, 1),
            Err(Error::UnknownClass { .. })
        ));
        assert!(build_dominoes(&top, ("0", "1"), &bottom, ("coat", "dress"), &CorrelationSpec::top(0.3), 10, 1).is_err());
    }
}
