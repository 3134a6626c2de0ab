//! IDX reader/writer for the MNIST distribution files.
//!
//! Headers are big-endian: a 32-bit magic (`0x00000803` for `u8` images,
//! `0x00000801` for `u8` labels) followed by one 32-bit size per dimension.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Tensor2D;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw image payload of an IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format(format!("{what}: header truncated at byte {at}")))
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "images: bad magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"
        )));
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let expected = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("images: dimensions overflow".into()))?;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "images: header promises {expected} pixel bytes, file holds {}",
            payload.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "labels: bad magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"
        )));
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(Error::Format(format!(
            "labels: header promises {count} labels, file holds {}",
            payload.len()
        )));
    }
    Ok(payload.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Builds a dataset from parsed payloads, normalising pixels by 1/255.
pub fn dataset_from_idx(name: &str, images: &IdxImages, labels: &[u8]) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    let n = images.rows * images.cols;
    let data = images.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let features = Tensor2D::from_vec(images.count, n, data)?;
    let classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1).max(10);
    Dataset::new(
        name,
        features,
        labels.iter().map(|&l| l as usize).collect(),
        classes,
        Some((images.rows, images.cols)),
    )
}

/// Recovers the original byte per pixel (`round(x · 255)`).
pub fn pixel_bytes(dataset: &Dataset) -> Vec<u8> {
    dataset
        .features()
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect()
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let img = parse_images(&std::fs::read(images)?)?;
    let lab = parse_labels(&std::fs::read(labels)?)?;
    let name = images
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    dataset_from_idx(&name, &img, &lab)
}

/// The official MNIST train and test files.
#[derive(Debug, Clone)]
pub struct MnistSplits {
    pub train: Dataset,
    pub test: Dataset,
}

/// Loads `train-*-idx?-ubyte` and `t10k-*-idx?-ubyte` from `dir`.
pub fn load_mnist_dir(dir: &Path) -> Result<MnistSplits> {
    let train = load_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?;
    Ok(MnistSplits {
        train: Dataset { name: "mnist-train".into(), ..train },
        test: Dataset { name: "mnist-test".into(), ..test },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_tiny_image() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 128, 0];
        let img = parse_images(&bytes).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (1, 2, 2));
        let ds = dataset_from_idx("t", &img, &[7]).unwrap();
        assert_eq!(ds.x(0), &[0.0, 1.0, 128.0 / 255.0, 0.0]);
        assert_eq!(ds.labels(), &[7]);
        assert_eq!(ds.image_shape(), Some((2, 2)));
    }

    #[test]
    fn single_label() {
        assert_eq!(parse_labels(&[0, 0, 8, 1, 0, 0, 0, 1, 7]).unwrap(), vec![7]);
    }

    #[test]
    fn bad_magic_is_quoted() {
        let err = parse_labels(&[0, 0, 8, 3, 0, 0, 0, 0]).unwrap_err();
        assert!(err.to_string().contains("0x00000803"), "{err}");
        assert!(parse_images(&[0, 0, 8, 1]).is_err());
    }

    #[test]
    fn count_mismatch() {
        let img = IdxImages {
            count: 2,
            rows: 1,
            cols: 1,
            pixels: vec![0, 1],
        };
        assert!(matches!(
            dataset_from_idx("t", &img, &[1]),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255];
        assert!(matches!(parse_images(&bytes), Err(Error::Format(_))));
    }
}
