//! Binary dataset cache.
//!
//! `"SSTD"`, then little-endian `u32` version, `n`, `c`, `count`, then
//! `count × n` little-endian `f64` features and `count` label bytes.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Tensor2D;

pub const DATASET_MAGIC: &[u8; 4] = b"SSTD";
pub const DATASET_VERSION: u32 = 1;

pub fn encode(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.classes() > 256 {
        return Err(Error::Config(format!(
            "dataset cache stores labels as bytes; {} classes do not fit",
            ds.classes()
        )));
    }
    let mut out = Vec::with_capacity(20 + ds.features().data().len() * 8 + ds.len());
    out.extend_from_slice(DATASET_MAGIC);
    for v in [
        DATASET_VERSION,
        ds.features_per_example() as u32,
        ds.classes() as u32,
        ds.len() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in ds.features().data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(ds.labels().iter().map(|&t| t as u8));
    Ok(out)
}

pub fn decode(name: &str, bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 20 || &bytes[..4] != DATASET_MAGIC {
        return Err(Error::Format("not an SSTD dataset cache".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let version = word(0);
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset cache version {version}")));
    }
    let (n, c, count) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let body = &bytes[20..];
    let expected = count * n * 8 + count;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "dataset cache body is {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let (feat, labels) = body.split_at(count * n * 8);
    let data = feat
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Dataset::new(
        name,
        Tensor2D::from_vec(count, n, data)?,
        labels.iter().map(|&t| t as usize).collect(),
        c,
        None,
    )
}

pub fn write(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, encode(ds)?)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Dataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cached".into());
    decode(&name, &std::fs::read(path)?)
}
