//! IDX container parsing (the MNIST on-disk format) and the dataset view
//! used by the experiment harness.
//!
//! Images use magic 0x00000803 with dimensions (count, rows, cols);
//! labels use magic 0x00000801. All integers are big-endian, pixels are
//! unsigned bytes normalized to `[0, 1]` by dividing by 255.

use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{HarnessError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Loaded dataset: flattened normalized images plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `(input, label)` pairs for the evaluator, truncated to `limit`.
    pub fn pairs(&self, limit: Option<usize>) -> Vec<(Vec<f64>, usize)> {
        let n = limit.unwrap_or(self.len()).min(self.len());
        self.images[..n]
            .iter()
            .cloned()
            .zip(self.labels[..n].iter().map(|&l| l as usize))
            .collect()
    }
}

fn truncated(cur: &Cursor<Vec<u8>>, what: &str) -> HarnessError {
    HarnessError::Format {
        offset: cur.position(),
        msg: format!("truncated payload while reading {what}"),
    }
}

/// Parse an IDX image file into raw bytes plus dimensions.
pub fn parse_idx_images(path: &Path) -> Result<(Vec<u8>, usize, usize, usize)> {
    let mut cur = Cursor::new(std::fs::read(path)?);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated(&cur, "magic"))?;
    if magic != IMAGE_MAGIC {
        return Err(HarnessError::Format {
            offset: 0,
            msg: format!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        });
    }
    let n = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated(&cur, "count"))? as usize;
    let rows = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated(&cur, "rows"))? as usize;
    let cols = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated(&cur, "cols"))? as usize;
    let mut pixels = vec![0u8; n * rows * cols];
    cur.read_exact(&mut pixels)
        .map_err(|_| truncated(&cur, "pixel payload"))?;
    Ok((pixels, n, rows, cols))
}

/// Parse an IDX label file.
pub fn parse_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(std::fs::read(path)?);
    let magic = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated(&cur, "magic"))?;
    if magic != LABEL_MAGIC {
        return Err(HarnessError::Format {
            offset: 0,
            msg: format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        });
    }
    let n = cur
        .read_u32::<BigEndian>()
        .map_err(|_| truncated(&cur, "count"))? as usize;
    let mut labels = vec![0u8; n];
    cur.read_exact(&mut labels)
        .map_err(|_| truncated(&cur, "label payload"))?;
    Ok(labels)
}

/// Paths for a dataset base: `<base>-images.idx3` / `<base>-labels.idx1`.
pub fn dataset_paths(base: &Path) -> (PathBuf, PathBuf) {
    let base_str = base.to_string_lossy();
    (
        PathBuf::from(format!("{base_str}-images.idx3")),
        PathBuf::from(format!("{base_str}-labels.idx1")),
    )
}

/// Load the image/label pair for a dataset base path, normalizing pixels
/// to `[0, 1]`.
pub fn load_idx(base: &Path) -> Result<Dataset> {
    let (img_path, lbl_path) = dataset_paths(base);
    let (pixels, n, rows, cols) = parse_idx_images(&img_path)?;
    let labels = parse_idx_labels(&lbl_path)?;
    if labels.len() != n {
        return Err(HarnessError::Format {
            offset: 4,
            msg: format!("{n} images but {} labels", labels.len()),
        });
    }
    let stride = rows * cols;
    let images = (0..n)
        .map(|i| {
            pixels[i * stride..(i + 1) * stride]
                .iter()
                .map(|&b| f64::from(b) / 255.0)
                .collect()
        })
        .collect();
    Ok(Dataset {
        images,
        labels,
        rows,
        cols,
    })
}

/// Write an IDX image file.
pub fn save_idx_images(path: &Path, pixels: &[u8], n: usize, rows: usize, cols: usize) -> Result<()> {
    if pixels.len() != n * rows * cols {
        return Err(HarnessError::config(format!(
            "pixel buffer {} != {n}x{rows}x{cols}",
            pixels.len()
        )));
    }
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.write_u32::<BigEndian>(IMAGE_MAGIC)?;
    out.write_u32::<BigEndian>(n as u32)?;
    out.write_u32::<BigEndian>(rows as u32)?;
    out.write_u32::<BigEndian>(cols as u32)?;
    out.extend_from_slice(pixels);
    std::fs::write(path, out)?;
    Ok(())
}

/// Write an IDX label file.
pub fn save_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABEL_MAGIC)?;
    out.write_u32::<BigEndian>(labels.len() as u32)?;
    out.extend_from_slice(labels);
    std::fs::write(path, out)?;
    Ok(())
}
