use std::path::Path;

use crate::error::{Error, Result};

/// Parse a seed list: comma-separated items, each a single seed or an
/// inclusive range `a..b`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("--seeds: cannot parse `{s}` (expected e.g. `1..10` or `1,4,7`)"));
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(bad());
        }
        match item.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
                if a > b {
                    return Err(Error::Config(format!("--seeds: empty range `{item}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

/// Parse `a,b` into a pair of strings.
pub fn parse_pair<'a>(flag: &str, s: &'a str) -> Result<(&'a str, &'a str)> {
    match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok((a, b)),
        _ => Err(Error::Config(format!("{flag}: expected two comma-separated values, got `{s}`"))),
    }
}

/// Parse `H x W` / `HxW` image shapes.
pub fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("--shape: expected HxW, got `{s}`"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((h.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?))
}

pub fn require_file(flag: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{flag}: {} is not a readable file", path.display())))
    }
}

pub fn require_dir(flag: &str, path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::Config(format!("{flag}: {} is not a directory", path.display())))
    }
}

/// An output directory must not be an existing file.
pub fn output_dir(flag: &str, path: &Path) -> Result<()> {
    if path.exists() && !path.is_dir() {
        return Err(Error::Config(format!("{flag}: {} exists and is not a directory", path.display())));
    }
    Ok(())
}

pub fn output_file(flag: &str, path: &Path) -> Result<()> {
    if path.is_dir() {
        return Err(Error::Config(format!("{flag}: {} is a directory", path.display())));
    }
    Ok(())
}
