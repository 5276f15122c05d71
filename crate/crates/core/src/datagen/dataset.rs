use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binio::{read_file, write_file, ByteReader};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DATASET_MAGIC: &[u8; 4] = b"BLDS";
pub const DATASET_VERSION: u16 = 1;

/// Named contiguous column range `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn new(name: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            name: name.into(),
            start,
            end,
        }
    }

    pub fn columns(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn width(&self) -> usize {
        self.end - self.start
    }
}

/// Orthogonal `Q` applied to the generated rows: stored features are `x · Q`
/// for original row vectors `x`, so `features · Qᵀ` recovers the originals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub matrix: Vec<f64>,
}

impl Projection {
    pub fn from_matrix(q: &Matrix) -> Self {
        Self {
            dim: q.rows(),
            matrix: q.as_slice().to_vec(),
        }
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_vec(self.dim, self.dim, self.matrix.clone())
            .expect("projection stored with consistent dim")
    }

    pub fn project_row(&self, original: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, &a) in original.iter().enumerate() {
            let q_row = &self.matrix[k * self.dim..(k + 1) * self.dim];
            for (o, &q) in out.iter_mut().zip(q_row) {
                *o += a * q;
            }
        }
        out
    }

    pub fn unproject_row(&self, projected: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|k| {
                let q_row = &self.matrix[k * self.dim..(k + 1) * self.dim];
                q_row.iter().zip(projected).map(|(q, p)| q * p).sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDecl {
    pub id: u32,
    pub name: String,
    /// `Some(true)` for in-group, `Some(false)` for out-group.
    pub in_group: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub fraction: f64,
    pub seed: u64,
    pub flipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub spec_hash: String,
    pub seed: u64,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Projection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_table: Option<Vec<GroupDecl>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corruptions: Vec<CorruptionRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl DatasetMeta {
    /// Metadata for a generator, hashing its canonical JSON parameters.
    pub fn for_generator(generator: &str, params: serde_json::Value, seed: u64) -> Self {
        let canonical = serde_json::to_vec(&params).expect("json value serializes");
        let mut h = Sha256::new();
        h.update(generator.as_bytes());
        h.update([0u8]);
        h.update(&canonical);
        Self {
            generator: generator.to_string(),
            spec_hash: hex::encode(h.finalize()),
            seed,
            params,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub groups: Option<Vec<u32>>,
    pub blocks: Vec<Block>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        groups: Option<Vec<u32>>,
        blocks: Vec<Block>,
        meta: DatasetMeta,
    ) -> Result<Self> {
        let ds = Self {
            features,
            labels,
            groups,
            blocks,
            meta,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::UnknownBlock(name.to_string()))
    }

    pub fn projection(&self) -> Option<&Projection> {
        self.meta.projection.as_ref()
    }

    /// Split into rows `0..at` and `at..n`, both keeping blocks and metadata.
    ///
    /// Generators draw rows i.i.d., so this is how train and test sets that
    /// share a projection and slab layout are produced.
    pub fn split_at(&self, at: usize) -> Result<(Dataset, Dataset)> {
        if at == 0 || at >= self.len() {
            return Err(Error::Config(format!("split point {at} outside 1..{}", self.len())));
        }
        let part = |range: std::ops::Range<usize>| {
            let d = self.dim();
            let features = Matrix::from_vec(range.len(), d, self.features.as_slice()[range.start * d..range.end * d].to_vec())?;
            let mut meta = self.meta.clone();
            meta.notes.push(format!("rows {}..{} of {}", range.start, range.end, self.len()));
            Dataset::new(
                features,
                self.labels[range.clone()].to_vec(),
                self.groups.as_ref().map(|g| g[range.clone()].to_vec()),
                self.blocks.clone(),
                meta,
            )
        };
        Ok((part(0..at)?, part(at..self.len())?))
    }

    /// Features in generator coordinates (undoing any stored projection).
    pub fn original_features(&self) -> Matrix {
        match self.projection() {
            None => self.features.clone(),
            Some(p) => {
                let mut out = Matrix::zeros(self.len(), self.dim());
                for i in 0..self.len() {
                    out.row_mut(i).copy_from_slice(&p.unproject_row(self.row(i)));
                }
                out
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let d = self.features.cols();
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!("dataset must be non-empty, got n={n}, D={d}")));
        }
        if self.features.rows() != n {
            return Err(Error::Shape(format!(
                "{} feature rows for {n} labels",
                self.features.rows()
            )));
        }
        if let Some(bad) = self.labels.iter().position(|&l| l > 1) {
            return Err(Error::Shape(format!("label {} at row {bad} is not binary", self.labels[bad])));
        }
        if !self.features.all_finite() {
            return Err(Error::Shape("non-finite feature value".into()));
        }
        let mut sorted: Vec<&Block> = self.blocks.iter().collect();
        sorted.sort_by_key(|b| b.start);
        let mut next = 0;
        for b in &sorted {
            if b.start != next || b.end <= b.start {
                return Err(Error::Shape(format!(
                    "blocks must tile columns 0..{d} without gaps or overlap (block `{}` = {}..{})",
                    b.name, b.start, b.end
                )));
            }
            next = b.end;
        }
        if next != d {
            return Err(Error::Shape(format!("blocks cover 0..{next}, expected 0..{d}")));
        }
        for (i, a) in self.blocks.iter().enumerate() {
            if self.blocks[i + 1..].iter().any(|b| b.name == a.name) {
                return Err(Error::Shape(format!("duplicate block name `{}`", a.name)));
            }
        }
        if let Some(groups) = &self.groups {
            if groups.len() != n {
                return Err(Error::Shape(format!("{} group tags for {n} rows", groups.len())));
            }
            let table = self.meta.group_table.as_ref().ok_or_else(|| {
                Error::Shape("group tags present without a group table".into())
            })?;
            if let Some(g) = groups.iter().find(|g| !table.iter().any(|d| d.id == **g)) {
                return Err(Error::Shape(format!("group id {g} is not declared")));
            }
        }
        if let Some(p) = &self.meta.projection {
            if p.dim != d || p.matrix.len() != d * d {
                return Err(Error::Shape("projection does not match feature dimension".into()));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.len();
        let d = self.dim();
        let mut out = Vec::with_capacity(64 + n * (1 + 8 * d));
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            out.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
            out.extend_from_slice(b.name.as_bytes());
            out.extend_from_slice(&(b.start as u64).to_le_bytes());
            out.extend_from_slice(&(b.end as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.labels);
        match &self.groups {
            None => out.push(0),
            Some(g) => {
                out.push(1);
                for v in g {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        for v in self.features.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let meta = serde_json::to_vec(&self.meta)?;
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        Ok(out)
    }

    pub fn from_bytes(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(name, bytes);
        let magic = r.take(4, "magic")?;
        if magic != DATASET_MAGIC {
            return Err(r.error_at(0, format!("bad magic {magic:02x?}, expected \"BLDS\"")));
        }
        let version = r.u16_le("version")?;
        if version != DATASET_VERSION {
            return Err(r.error_at(4, format!("unsupported version {version}")));
        }
        let n = r.u64_le("row count")? as usize;
        let d = r.u64_le("column count")? as usize;
        let block_count = r.u32_le("block count")? as usize;
        let mut blocks = Vec::new();
        for _ in 0..block_count {
            let len = r.u32_le("block name length")? as usize;
            let at = r.offset() as usize;
            let raw = r.take(len, "block name")?;
            let name = std::str::from_utf8(raw)
                .map_err(|_| r.error_at(at, "block name is not UTF-8"))?
                .to_string();
            let start = r.u64_le("block start")? as usize;
            let end = r.u64_le("block end")? as usize;
            blocks.push(Block { name, start, end });
        }
        let labels = r.take(n, "labels")?.to_vec();
        let groups = match r.u8("group flag")? {
            0 => None,
            1 => {
                let raw = r.take(n.checked_mul(4).ok_or_else(|| r.error("row count overflows"))?, "group tags")?;
                Some(
                    raw.chunks_exact(4)
                        .map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                        .collect(),
                )
            }
            other => return Err(r.error(format!("invalid group flag {other}"))),
        };
        let count = n
            .checked_mul(d)
            .ok_or_else(|| r.error("feature count overflows"))?;
        let features = r.f64_vec(count, "features")?;
        let meta_len = r.u64_le("meta length")? as usize;
        let meta_at = r.offset() as usize;
        let meta_raw = r.take(meta_len, "meta")?;
        let meta: DatasetMeta = serde_json::from_slice(meta_raw)
            .map_err(|e| r.error_at(meta_at, format!("invalid meta JSON: {e}")))?;
        r.finish()?;
        let features = Matrix::from_vec(n, d, features)?;
        Dataset::new(features, labels, groups, blocks, meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        Self::from_bytes(&path.display().to_string(), &bytes)
    }
}
