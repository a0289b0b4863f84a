//! Dataset readers and the equal-size client partition.

mod idx;
mod libsvm;
mod synth;

pub use idx::{parse_mnist_idx, write_mnist_idx, IMAGE_MAGIC, LABEL_MAGIC};
pub use libsvm::{parse_libsvm, write_libsvm};
pub use synth::{synthetic_a9a, synthetic_digits, A9A_DIM, A9A_GROUPS, A9A_ROWS};

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use log::info;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::objectives::Sample;
use crate::streams::{derive_stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Libsvm,
    Idx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub format: DataFormat,
    pub paths: Vec<PathBuf>,
    pub n_clients: usize,
    pub m: usize,
    pub d_features: usize,
    pub shuffle_seed: u64,
}

/// Reads a file, inflating it when the name ends in `.gz`.
pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_libsvm(path: &Path) -> Result<(Vec<Sample>, usize)> {
    parse_libsvm(&read_input(path)?)
}

pub fn load_mnist(images: &Path, labels: &Path) -> Result<Vec<Sample>> {
    parse_mnist_idx(&read_input(images)?, &read_input(labels)?)
}

/// Client shards plus the sample ids behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub shards: Vec<Vec<Sample>>,
    /// `ids[i][j]` is the input position of `shards[i][j]`.
    pub ids: Vec<Vec<usize>>,
    pub dropped: Vec<usize>,
}

impl Partition {
    pub fn local_size(&self) -> usize {
        self.shards.first().map_or(0, Vec::len)
    }
}

/// Shuffles by `seed`, cuts `n` contiguous blocks of `⌊N/n⌋` and drops the
/// remainder.
pub fn partition(samples: &[Sample], n: usize, seed: u64) -> Result<Partition> {
    let total = samples.len();
    if n == 0 || total < n {
        return Err(Error::param(format!("cannot split {total} samples across {n} clients")));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut derive_stream(seed, u64::MAX, 0, Purpose::Shuffle));
    let m = total / n;
    let ids: Vec<Vec<usize>> = order.chunks(m).take(n).map(<[usize]>::to_vec).collect();
    let dropped = order[n * m..].to_vec();
    if !dropped.is_empty() {
        info!("partition: dropped {} of {total} samples to keep m = {m}", dropped.len());
    }
    let shards = ids.iter().map(|b| b.iter().map(|&j| samples[j].clone()).collect()).collect();
    Ok(Partition { shards, ids, dropped })
}
