//! Deterministic random stream derivation.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(master seed, client, round, purpose)`. The four inputs are folded
//! through the SplitMix64 finalizer and the result seeds a ChaCha8
//! generator. Reruns with the same key reproduce the same draws within
//! this implementation; bit-identical output across implementations is
//! not a goal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type handed to every randomized operation.
pub type Stream = ChaCha8Rng;

/// What a stream is used for. Distinct purposes at the same
/// `(client, round)` yield independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Sample,
    Noise,
    Compress,
    Snapshot,
    Shuffle,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Sample => 0x5341_4d50_4c45_0001,
            Purpose::Noise => 0x4e4f_4953_4500_0002,
            Purpose::Compress => 0x434f_4d50_5200_0003,
            Purpose::Snapshot => 0x534e_4150_5300_0004,
            Purpose::Shuffle => 0x5348_5546_4c45_0005,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the four key components into a single 64-bit seed.
pub fn stream_seed(master: u64, client: u64, round: u64, purpose: Purpose) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ client.rotate_left(17));
    h = splitmix64(h ^ round.rotate_left(41));
    splitmix64(h ^ purpose.tag())
}

pub fn derive_stream(master: u64, client: u64, round: u64, purpose: Purpose) -> Stream {
    Stream::seed_from_u64(stream_seed(master, client, round, purpose))
}

/// The per-client streams consumed by one protocol round.
pub struct RoundStreams {
    pub sample: Stream,
    pub noise: Stream,
    pub compress: Stream,
    pub snapshot: Stream,
}

impl RoundStreams {
    pub fn new(master: u64, client: usize, round: u64) -> Self {
        let c = client as u64;
        Self {
            sample: derive_stream(master, c, round, Purpose::Sample),
            noise: derive_stream(master, c, round, Purpose::Noise),
            compress: derive_stream(master, c, round, Purpose::Compress),
            snapshot: derive_stream(master, c, round, Purpose::Snapshot),
        }
    }
}
