use crate::compress::CompressorSpec;
use crate::error::{Error, Result};

/// How payload size is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitMode {
    /// `k · B` per message: values only, indices assumed free (shared seed).
    Paper,
    /// `k · (B + ⌈log₂ d⌉)` per message for random-k: explicit indices.
    Wire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitAccounting {
    pub mode: BitMode,
    pub bits_per_scalar: u32,
}

impl Default for BitAccounting {
    fn default() -> Self {
        Self { mode: BitMode::Paper, bits_per_scalar: 32 }
    }
}

/// `⌈log₂ d⌉`, with 0 for `d ≤ 1`.
pub fn index_bits(d: usize) -> u32 {
    if d <= 1 {
        0
    } else {
        usize::BITS - (d - 1).leading_zeros()
    }
}

pub fn bits_per_message(comp: CompressorSpec, d: usize, acct: BitAccounting) -> Result<u64> {
    if acct.bits_per_scalar == 0 {
        return Err(Error::param("bits per scalar must be at least 1"));
    }
    let b = acct.bits_per_scalar as u64;
    let k = comp.kept(d)? as u64;
    Ok(match (comp, acct.mode) {
        (CompressorSpec::Identity, _) | (_, BitMode::Paper) => k * b,
        (CompressorSpec::RandK { .. }, BitMode::Wire) => k * (b + index_bits(d) as u64),
    })
}

/// Uplink bits for one round with `n` clients.
pub fn bits_per_round(comp: CompressorSpec, d: usize, n: usize, acct: BitAccounting) -> Result<u64> {
    Ok(n as u64 * bits_per_message(comp, d, acct)?)
}
