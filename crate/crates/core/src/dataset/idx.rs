//! Big-endian IDX files holding 8-bit image stacks (`0x00000803`) and labels (`0x00000801`).

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_owned(), reason: reason.into() }
}

fn read_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| format_error(path, "truncated IDX header"))
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path, name: &'static str) -> Result<()> {
    if read_u32(bytes, 0, path).ok() != Some(expected) {
        return Err(Error::BadMagic { path: path.to_owned(), expected: name });
    }
    Ok(())
}

pub fn decode_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<Array2<u8>>> {
    check_magic(bytes, IMAGES_MAGIC, path, "IDX u8 rank-3 (0x00000803)")?;
    let count = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * size {
        return Err(format_error(
            path,
            format!("expected {} pixel bytes, found {}", count * size, body.len()),
        ));
    }
    Ok(body
        .chunks_exact(size.max(1))
        .take(count)
        .map(|c| Array2::from_shape_vec((rows, cols), c.to_vec()).expect("chunk of rows × cols"))
        .collect())
}

pub fn decode_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC, path, "IDX u8 rank-1 (0x00000801)")?;
    let count = read_u32(bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(format_error(path, format!("expected {count} labels, found {}", body.len())));
    }
    Ok(body.to_vec())
}

pub fn encode_idx_images(images: &[Array2<u8>]) -> Vec<u8> {
    let (rows, cols) = images.first().map(|a| a.dim()).unwrap_or((0, 0));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for v in [images.len(), rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    for img in images {
        assert_eq!(img.dim(), (rows, cols), "all images must share one shape");
        out.extend(img.iter());
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Grayscale rasters plus optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitSource {
    pub images: Vec<Array2<u8>>,
    pub labels: Option<Vec<u8>>,
}

impl DigitSource {
    pub fn load(images: &Path, labels: Option<&Path>) -> Result<Self> {
        let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(format!("reading {}", p.display()), e));
        let images_data = decode_idx_images(&read(images)?, images)?;
        let labels = match labels {
            Some(p) => {
                let l = decode_idx_labels(&read(p)?, p)?;
                if l.len() != images_data.len() {
                    return Err(format_error(p, format!("{} labels for {} images", l.len(), images_data.len())));
                }
                Some(l)
            }
            None => None,
        };
        Ok(Self { images: images_data, labels })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}
