//! Big-endian IDX containers as distributed with (F)MNIST.
//!
//! ```text
//! images: u32 magic 0x00000803, u32 count, u32 rows, u32 cols, count·rows·cols bytes
//! labels: u32 magic 0x00000801, u32 count, count bytes
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::{DreError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images scaled to `[0, 1]`, one flattened row-major image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Array2<f64>,
}

impl ImageSet {
    pub fn count(&self) -> usize {
        self.pixels.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdxFile {
    Images(ImageSet),
    Labels(Vec<u8>),
}

/// An image file paired with its label file.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: ImageSet,
    pub labels: Vec<u8>,
}

fn word(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DreError::Idx(format!("inconsistent length: header truncated at byte {at}")))
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxFile> {
    match word(bytes, 0)? {
        IMAGES_MAGIC => {
            let count = word(bytes, 4)? as usize;
            let rows = word(bytes, 8)? as usize;
            let cols = word(bytes, 12)? as usize;
            let expected = count
                .checked_mul(rows)
                .and_then(|v| v.checked_mul(cols))
                .and_then(|v| v.checked_add(16))
                .ok_or_else(|| DreError::Idx("declared dimensions overflow".into()))?;
            if bytes.len() != expected {
                return Err(DreError::Idx(format!(
                    "inconsistent length: header declares {count}x{rows}x{cols} ({expected} bytes), file has {}",
                    bytes.len()
                )));
            }
            let pixels = Array2::from_shape_fn((count, rows * cols), |(i, j)| {
                bytes[16 + i * rows * cols + j] as f64 / 255.0
            });
            Ok(IdxFile::Images(ImageSet { rows, cols, pixels }))
        }
        LABELS_MAGIC => {
            let count = word(bytes, 4)? as usize;
            if bytes.len() != 8 + count {
                return Err(DreError::Idx(format!(
                    "inconsistent length: header declares {count} labels, file has {} payload bytes",
                    bytes.len().saturating_sub(8)
                )));
            }
            let labels = bytes[8..].to_vec();
            if let Some(bad) = labels.iter().find(|&&l| l > 9) {
                return Err(DreError::Idx(format!("label {bad} outside 0..9")));
            }
            Ok(IdxFile::Labels(labels))
        }
        other => Err(DreError::Idx(format!("wrong magic number 0x{other:08x}"))),
    }
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<IdxFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| {
        DreError::Idx(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_idx(&bytes)
}

/// Reads an image file and its label file and checks that counts agree.
pub fn load_labeled(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledImages> {
    let images = match read_idx(images.as_ref())? {
        IdxFile::Images(set) => set,
        IdxFile::Labels(_) => {
            return Err(DreError::Idx(format!(
                "{} holds labels, expected images",
                images.as_ref().display()
            )))
        }
    };
    let labels = match read_idx(labels.as_ref())? {
        IdxFile::Labels(l) => l,
        IdxFile::Images(_) => {
            return Err(DreError::Idx(format!(
                "{} holds images, expected labels",
                labels.as_ref().display()
            )))
        }
    };
    if images.count() != labels.len() {
        return Err(DreError::Idx(format!(
            "image/label count mismatch: {} images, {} labels",
            images.count(),
            labels.len()
        )));
    }
    Ok(LabeledImages { images, labels })
}

pub fn write_idx_images(
    path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    pixels: &[u8],
) -> Result<()> {
    let per = rows * cols;
    if per == 0 || pixels.len() % per != 0 {
        return Err(DreError::Idx(format!(
            "{} pixel bytes do not form whole {rows}x{cols} images",
            pixels.len()
        )));
    }
    let mut f = fs::File::create(path)?;
    for w in [IMAGES_MAGIC, (pixels.len() / per) as u32, rows as u32, cols as u32] {
        f.write_all(&w.to_be_bytes())?;
    }
    f.write_all(pixels)?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&LABELS_MAGIC.to_be_bytes())?;
    f.write_all(&(labels.len() as u32).to_be_bytes())?;
    f.write_all(labels)?;
    Ok(())
}
