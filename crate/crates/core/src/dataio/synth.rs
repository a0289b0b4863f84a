//! Deterministic stand-ins for the benchmark datasets, for machines
//! without the real files.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::objectives::{Sample, SparseVec};
use crate::streams::{derive_stream, Purpose, Stream};

/// Category counts of the 14 one-hot attribute groups; they sum to 123.
pub const A9A_GROUPS: [usize; 14] = [5, 8, 5, 16, 7, 14, 6, 5, 2, 3, 3, 2, 41, 6];
pub const A9A_DIM: usize = 123;
pub const A9A_ROWS: usize = 32_561;

const SYNTH_CLIENT: u64 = u64::MAX - 1;

fn zipf_weights(k: usize, rng: &mut Stream) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    w.shuffle(rng);
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn pick(weights: &[f64], rng: &mut Stream) -> usize {
    let mut u: f64 = rng.gen();
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Binary one-hot rows shaped like a9a: 14 active features out of 123,
/// labels from a hidden logistic model with roughly a quarter positive.
pub fn synthetic_a9a(rows: usize, seed: u64) -> Vec<Sample> {
    let mut rng = derive_stream(seed, SYNTH_CLIENT, 0, Purpose::Shuffle);
    let group_w: Vec<Vec<f64>> = A9A_GROUPS.iter().map(|&k| zipf_weights(k, &mut rng)).collect();
    let hidden: Vec<f64> = (0..A9A_DIM)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            1.2 * z
        })
        .collect();

    let mut feats = Vec::with_capacity(rows);
    let mut scores = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut idx = Vec::with_capacity(A9A_GROUPS.len());
        let mut offset = 0;
        for (g, &k) in A9A_GROUPS.iter().enumerate() {
            idx.push((offset + pick(&group_w[g], &mut rng)) as u32);
            offset += k;
        }
        scores.push(idx.iter().map(|&j| hidden[j as usize]).sum::<f64>());
        feats.push(idx);
    }
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted.get(rows * 4 / 5).copied().unwrap_or(0.0);

    feats
        .into_iter()
        .zip(scores)
        .map(|(idx, s)| {
            let p = 1.0 / (1.0 + (-(s - threshold)).exp());
            let label = if rng.gen::<f64>() < p { 1 } else { -1 };
            let n = idx.len();
            Sample::new(SparseVec::new(idx, vec![1.0; n]), label)
        })
        .collect()
}

/// 28×28 grayscale "digits": each class is a fixed random stroke pattern,
/// samples drop and jitter its pixels and add background speckle.
pub fn synthetic_digits(rows: usize, seed: u64) -> Vec<Sample> {
    let mut rng = derive_stream(seed, SYNTH_CLIENT, 1, Purpose::Shuffle);
    let pixels = 784;
    let protos: Vec<Vec<usize>> = (0..10)
        .map(|_| {
            let mut all: Vec<usize> = (0..pixels).collect();
            all.shuffle(&mut rng);
            all.truncate(120);
            all
        })
        .collect();
    (0..rows)
        .map(|_| {
            let class = rng.gen_range(0..10);
            let mut img = vec![0.0; pixels];
            for &p in &protos[class] {
                if rng.gen::<f64>() < 0.85 {
                    img[p] = rng.gen_range(0.6..1.0);
                }
            }
            for _ in 0..30 {
                let p = rng.gen_range(0..pixels);
                img[p] = f64::max(img[p], rng.gen_range(0.0..0.5));
            }
            Sample::new(SparseVec::from_dense(&img), class as i32)
        })
        .collect()
}
