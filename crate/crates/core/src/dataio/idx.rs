use crate::error::{Error, Result};
use crate::objectives::{Sample, SparseVec};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::parse(0, format!("{what}: truncated header")))
}

/// Parses an IDX image/label pair into samples with pixels scaled by 1/255.
pub fn parse_mnist_idx(images: &[u8], labels: &[u8]) -> Result<Vec<Sample>> {
    let magic = be_u32(images, 0, "images")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::parse(0, format!("images: expected magic {IMAGE_MAGIC:#010x}, found {magic:#010x}")));
    }
    let magic = be_u32(labels, 0, "labels")?;
    if magic != LABEL_MAGIC {
        return Err(Error::parse(0, format!("labels: expected magic {LABEL_MAGIC:#010x}, found {magic:#010x}")));
    }
    let n = be_u32(images, 4, "images")? as usize;
    let rows = be_u32(images, 8, "images")? as usize;
    let cols = be_u32(images, 12, "images")? as usize;
    let n_labels = be_u32(labels, 4, "labels")? as usize;
    if n != n_labels {
        return Err(Error::parse(0, format!("{n} images but {n_labels} labels")));
    }
    let pixels = rows * cols;
    let img = &images[16..];
    let lab = &labels[8..];
    if img.len() < n * pixels {
        return Err(Error::parse(0, format!("images: expected {} payload bytes, found {}", n * pixels, img.len())));
    }
    if lab.len() < n {
        return Err(Error::parse(0, format!("labels: expected {n} payload bytes, found {}", lab.len())));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dense: Vec<f64> = img[i * pixels..(i + 1) * pixels].iter().map(|&p| p as f64 / 255.0).collect();
        out.push(Sample::new(SparseVec::from_dense(&dense), lab[i] as i32));
    }
    Ok(out)
}

/// Encodes samples with 784-pixel grayscale features as an IDX pair.
/// Pixel values are rounded to the nearest of 256 levels.
pub fn write_mnist_idx(samples: &[Sample], rows: usize, cols: usize) -> (Vec<u8>, Vec<u8>) {
    let n = samples.len() as u32;
    let mut images = Vec::with_capacity(16 + samples.len() * rows * cols);
    images.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    images.extend_from_slice(&n.to_be_bytes());
    images.extend_from_slice(&(rows as u32).to_be_bytes());
    images.extend_from_slice(&(cols as u32).to_be_bytes());
    let mut labels = Vec::with_capacity(8 + samples.len());
    labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    for s in samples {
        let mut px = vec![0u8; rows * cols];
        for (j, v) in s.features.iter() {
            px[j] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        }
        images.extend_from_slice(&px);
        labels.push(s.label as u8);
    }
    (images, labels)
}
