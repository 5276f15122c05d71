//! Raw image sources: IDX (MNIST / Fashion-MNIST) and CIFAR-10 binary batches.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::binio::{read_file, ByteReader};
use crate::error::{Error, Result};
use crate::seed;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const CIFAR_SIDE: usize = 32;
const CIFAR_RECORD: usize = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE;

/// Class naming scheme of an image source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vocabulary {
    Mnist,
    FashionMnist,
    Cifar10,
}

const FASHION_NAMES: [&[&str]; 10] = [
    &["t-shirt", "tshirt", "top", "t-shirt/top"],
    &["trouser", "trousers"],
    &["pullover"],
    &["dress", "frock"],
    &["coat"],
    &["sandal"],
    &["shirt"],
    &["sneaker"],
    &["bag"],
    &["ankle-boot", "boot"],
];

const CIFAR_NAMES: [&[&str]; 10] = [
    &["airplane", "plane"],
    &["automobile", "car"],
    &["bird"],
    &["cat"],
    &["deer"],
    &["dog"],
    &["frog"],
    &["horse"],
    &["ship"],
    &["truck"],
];

impl Vocabulary {
    pub fn name(self) -> &'static str {
        match self {
            Vocabulary::Mnist => "mnist",
            Vocabulary::FashionMnist => "fashion-mnist",
            Vocabulary::Cifar10 => "cifar10",
        }
    }

    /// Resolve a class name (or a bare class id) to its label byte.
    pub fn resolve(self, name: &str) -> Result<u8> {
        let key = name.trim().to_ascii_lowercase();
        let table = match self {
            Vocabulary::Mnist => None,
            Vocabulary::FashionMnist => Some(&FASHION_NAMES),
            Vocabulary::Cifar10 => Some(&CIFAR_NAMES),
        };
        let by_name = table.and_then(|t| t.iter().position(|aliases| aliases.contains(&key.as_str())));
        let by_id = key.parse::<u8>().ok().filter(|&v| v < 10);
        by_name.map(|p| p as u8).or(by_id).ok_or_else(|| Error::UnknownClass {
            name: name.to_string(),
            vocabulary: self.name().to_string(),
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mnist" => Ok(Vocabulary::Mnist),
            "fashion-mnist" | "fmnist" | "fashion" => Ok(Vocabulary::FashionMnist),
            "cifar10" | "cifar-10" | "cifar" => Ok(Vocabulary::Cifar10),
            other => Err(Error::Config(format!("unknown image source kind `{other}`"))),
        }
    }
}

/// `n` images of `height × width × channels` pixels in `[0, 1]`, stored
/// image-major then row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<f64>,
    pub labels: Vec<u8>,
    pub vocabulary: Vocabulary,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let s = self.image_len();
        &self.pixels[i * s..(i + 1) * s]
    }

    pub fn indices_of(&self, class: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> ImageSet {
        let mut pixels = Vec::with_capacity(indices.len() * self.image_len());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
        }
        ImageSet {
            height: self.height,
            width: self.width,
            channels: self.channels,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            vocabulary: self.vocabulary,
        }
    }

    /// Seeded split into disjoint parts; the first receives
    /// `round(fraction · count)` images of every class.
    pub fn split(&self, fraction: f64, seed: u64) -> (ImageSet, ImageSet) {
        let mut rng = seed::rng(seed);
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for class in 0..=u8::MAX {
            let mut idx = self.indices_of(class);
            if idx.is_empty() {
                continue;
            }
            idx.shuffle(&mut rng);
            let cut = (fraction * idx.len() as f64).round() as usize;
            first.extend_from_slice(&idx[..cut]);
            second.extend_from_slice(&idx[cut..]);
        }
        first.sort_unstable();
        second.sort_unstable();
        (self.subset(&first), self.subset(&second))
    }
}

fn maybe_gunzip(name: &str, bytes: Vec<u8>) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::format_at_byte(name, 0, format!("gzip stream: {e}")))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Parsed IDX image file: `(count, rows, cols, pixels scaled to [0,1])`.
pub fn parse_idx_images(name: &str, bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>)> {
    let mut r = ByteReader::new(name, bytes);
    let magic = r.u32_be("magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(r.error_at(
            0,
            format!("magic {magic:#010x} is not an IDX image file ({IDX_IMAGES_MAGIC:#010x})"),
        ));
    }
    let n = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")? as usize;
    let cols = r.u32_be("column count")? as usize;
    let len = n
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| r.error_at(4, "dimensions overflow"))?;
    let raw = r.take(len, "pixel payload")?;
    r.finish()?;
    Ok((n, rows, cols, raw.iter().map(|&b| f64::from(b) / 255.0).collect()))
}

pub fn parse_idx_labels(name: &str, bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = ByteReader::new(name, bytes);
    let magic = r.u32_be("magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(r.error_at(
            0,
            format!("magic {magic:#010x} is not an IDX label file ({IDX_LABELS_MAGIC:#010x})"),
        ));
    }
    let n = r.u32_be("label count")? as usize;
    let labels = r.take(n, "label payload")?.to_vec();
    r.finish()?;
    Ok(labels)
}

/// Load an IDX image file (raw or gzip-compressed).
pub fn load_idx_images(path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let name = path.display().to_string();
    let bytes = maybe_gunzip(&name, read_file(path)?)?;
    parse_idx_images(&name, &bytes)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let name = path.display().to_string();
    let bytes = maybe_gunzip(&name, read_file(path)?)?;
    parse_idx_labels(&name, &bytes)
}

/// Load a paired IDX image + label file.
pub fn load_idx(images: &Path, labels: &Path, vocabulary: Vocabulary) -> Result<ImageSet> {
    let (n, height, width, pixels) = load_idx_images(images)?;
    let labels_v = load_idx_labels(labels)?;
    if labels_v.len() != n {
        return Err(Error::format_at_byte(
            labels.display().to_string(),
            4,
            format!("{} labels for {n} images", labels_v.len()),
        ));
    }
    Ok(ImageSet {
        height,
        width,
        channels: 1,
        pixels,
        labels: labels_v,
        vocabulary,
    })
}

pub fn parse_cifar10(name: &str, bytes: &[u8]) -> Result<ImageSet> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::format_at_byte(
            name,
            (bytes.len() - bytes.len() % CIFAR_RECORD) as u64,
            format!("length {} is not a positive multiple of {CIFAR_RECORD}", bytes.len()),
        ));
    }
    let n = bytes.len() / CIFAR_RECORD;
    let plane = CIFAR_SIDE * CIFAR_SIDE;
    let mut pixels = Vec::with_capacity(n * plane * 3);
    let mut labels = Vec::with_capacity(n);
    for (r, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        if rec[0] > 9 {
            return Err(Error::format_at_byte(
                name,
                (r * CIFAR_RECORD) as u64,
                format!("label byte {} outside 0..=9", rec[0]),
            ));
        }
        labels.push(rec[0]);
        let planes = &rec[1..];
        for p in 0..plane {
            for c in 0..3 {
                pixels.push(f64::from(planes[c * plane + p]) / 255.0);
            }
        }
    }
    Ok(ImageSet {
        height: CIFAR_SIDE,
        width: CIFAR_SIDE,
        channels: 3,
        pixels,
        labels,
        vocabulary: Vocabulary::Cifar10,
    })
}

pub fn load_cifar10(path: &Path) -> Result<ImageSet> {
    parse_cifar10(&path.display().to_string(), &read_file(path)?)
}

/// Convert one image to a 28×28 grayscale block.
///
/// 28×28×1 passes through; 32×32×3 is converted to luminance
/// `0.299 R + 0.587 G + 0.114 B` and center-cropped by two pixels per side.
pub fn to_grayscale_28(pixels: &[f64], height: usize, width: usize, channels: usize) -> Result<Vec<f64>> {
    if pixels.len() != height * width * channels {
        return Err(Error::Shape(format!(
            "{} pixels for a {height}x{width}x{channels} image",
            pixels.len()
        )));
    }
    match (height, width, channels) {
        (28, 28, 1) => Ok(pixels.to_vec()),
        (32, 32, 3) => {
            let mut out = Vec::with_capacity(28 * 28);
            for row in 2..30 {
                for col in 2..30 {
                    let p = &pixels[(row * 32 + col) * 3..(row * 32 + col) * 3 + 3];
                    let y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
                    out.push(y.clamp(0.0, 1.0));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Shape(format!(
            "unsupported image shape {height}x{width}x{channels}; expected 28x28x1 or 32x32x3"
        ))),
    }
}
