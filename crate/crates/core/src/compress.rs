//! Unbiased randomized compression operators.
//!
//! An operator `C` is an ω-compressor when `E[C(x)] = x` and
//! `E‖C(x) − x‖² ≤ ω‖x‖²`. Two are provided: the identity (ω = 0) and
//! random-k sparsification, which keeps a uniformly random size-k subset
//! of coordinates scaled by `d/k` and attains the variance bound with
//! equality at ω = d/k − 1.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::streams::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressorSpec {
    Identity,
    RandK { k: usize },
}

impl CompressorSpec {
    /// Number of coordinates a message carries at dimension `d`.
    pub fn kept(&self, d: usize) -> Result<usize> {
        match *self {
            CompressorSpec::Identity => Ok(d),
            CompressorSpec::RandK { k } => {
                if k == 0 || k > d {
                    return Err(Error::param(format!("rand_k needs 1 <= k <= d, got k={k}, d={d}")));
                }
                Ok(k)
            }
        }
    }

    /// Random-k with `k = ⌊d · fraction⌋`, the usual "keep 5%" setup.
    pub fn rand_fraction(d: usize, fraction: f64) -> Result<Self> {
        let k = (d as f64 * fraction).floor() as usize;
        let spec = CompressorSpec::RandK { k };
        spec.kept(d)?;
        Ok(spec)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CompressorSpec::Identity)
    }

    /// Applies the operator for a fixed, already drawn mask. `mask` must be
    /// strictly increasing; it is ignored for the identity.
    pub fn apply_mask(&self, x: &[f64], mask: &[usize]) -> Result<CompressedVector> {
        let d = x.len();
        match *self {
            CompressorSpec::Identity => Ok(CompressedVector {
                dim: d,
                indices: (0..d as u32).collect(),
                values: x.to_vec(),
                payload_bits: 0,
            }),
            CompressorSpec::RandK { k } => {
                self.kept(d)?;
                if mask.len() != k {
                    return Err(Error::param(format!("mask has {} entries, expected {k}", mask.len())));
                }
                if mask.windows(2).any(|w| w[0] >= w[1]) || mask.last().is_some_and(|&j| j >= d) {
                    return Err(Error::param("mask must be strictly increasing and within [0, d)"));
                }
                let scale = d as f64 / k as f64;
                Ok(CompressedVector {
                    dim: d,
                    indices: mask.iter().map(|&j| j as u32).collect(),
                    values: mask.iter().map(|&j| x[j] * scale).collect(),
                    payload_bits: 0,
                })
            }
        }
    }
}

/// `ω = d/k − 1` for random-k, `0` for the identity.
pub fn omega_of(spec: CompressorSpec, d: usize) -> Result<f64> {
    let k = spec.kept(d)?;
    Ok(d as f64 / k as f64 - 1.0)
}

/// Draws a fresh operator from `stream` and applies it to `x`.
pub fn compress(spec: CompressorSpec, x: &[f64], stream: &mut Stream) -> Result<CompressedVector> {
    match spec {
        CompressorSpec::Identity => spec.apply_mask(x, &[]),
        CompressorSpec::RandK { k } => {
            let d = x.len();
            spec.kept(d)?;
            let mut mask = index::sample(stream, d, k).into_vec();
            mask.sort_unstable();
            spec.apply_mask(x, &mask)
        }
    }
}

/// One client-to-server message: a sparse payload whose values are already
/// scaled, plus the number of bits it costs on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub payload_bits: u64,
}

impl CompressedVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn densify(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.add_into(&mut out, 1.0);
        out
    }

    /// `out += scale · densify(self)` without materializing the dense vector.
    pub fn add_into(&self, out: &mut [f64], scale: f64) {
        debug_assert_eq!(out.len(), self.dim);
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j as usize] += scale * v;
        }
    }
}
