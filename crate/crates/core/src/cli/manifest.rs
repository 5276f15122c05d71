use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::probe::export::{write_file, Provenance};

pub const MANIFEST_NAME: &str = "MANIFEST.json";

#[derive(Debug, Serialize)]
struct Entry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: &'a str,
    version: &'a str,
    files: Vec<Entry>,
}

/// Write `MANIFEST.json` in `dir` listing `files` (relative to `dir`) with
/// their sizes and SHA-256 digests, sorted by path.
pub fn write_manifest(dir: &Path, files: &[PathBuf], prov: &Provenance) -> Result<()> {
    let mut rel: Vec<&PathBuf> = files.iter().collect();
    rel.sort();
    rel.dedup();
    let mut entries = Vec::with_capacity(rel.len());
    for p in rel {
        let full = dir.join(p);
        let bytes = std::fs::read(&full).map_err(|e| Error::io(&full, e))?;
        entries.push(Entry {
            path: p.to_string_lossy().replace('\\', "/"),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let m = Manifest { command: &prov.command, seed: &prov.seed, version: &prov.version, files: entries };
    write_file(&dir.join(MANIFEST_NAME), serde_json::to_string_pretty(&m)? + "\n")
}
