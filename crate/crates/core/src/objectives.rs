//! Finite-sum objectives: per-sample loss and gradient, full-data averages.
//!
//! Three kinds are provided: logistic regression with the nonconvex
//! regularizer `λ Σ x_j²/(1 + x_j²)`, a one-hidden-layer sigmoid network with
//! softmax cross-entropy, and a separable quadratic used where exact
//! constants are needed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{axpy, pairwise_sum};

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        Self { indices, values }
    }

    pub fn from_dense(x: &[f64]) -> Self {
        let (indices, values) = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j as u32, *v))
            .unzip();
        Self { indices, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&j, &v)| (j as usize, v))
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.iter().map(|(j, v)| x[j] * v).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// One past the largest stored index, or 0 when empty.
    pub fn extent(&self) -> usize {
        self.indices.last().map_or(0, |&j| j as usize + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: SparseVec,
    pub label: i32,
}

impl Sample {
    pub fn new(features: SparseVec, label: i32) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    LogisticNcvx,
    ShallowNn,
    Quadratic,
}

/// Packing of the network parameters into one flat vector:
/// `W1` (hidden × input, row-major), `c1`, `W2` (output × hidden, row-major), `c2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShallowNetLayout {
    pub hidden: usize,
    pub input: usize,
    pub output: usize,
}

impl Default for ShallowNetLayout {
    fn default() -> Self {
        Self { hidden: 64, input: 784, output: 10 }
    }
}

impl ShallowNetLayout {
    pub fn dim(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = 0;
        let c1 = w1 + self.hidden * self.input;
        let w2 = c1 + self.hidden;
        let c2 = w2 + self.output * self.hidden;
        [w1, c1, w2, c2]
    }

    /// Borrows `(W1, c1, W2, c2)` out of a flat parameter vector.
    pub fn unpack<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let [_, c1, w2, c2] = self.offsets();
        let (w1s, rest) = x.split_at(c1);
        let (c1s, rest) = rest.split_at(w2 - c1);
        let (w2s, c2s) = rest.split_at(c2 - w2);
        (w1s, c1s, w2s, c2s)
    }

    fn unpack_mut<'a>(
        &self,
        x: &'a mut [f64],
    ) -> (&'a mut [f64], &'a mut [f64], &'a mut [f64], &'a mut [f64]) {
        let [_, c1, w2, c2] = self.offsets();
        let (w1s, rest) = x.split_at_mut(c1);
        let (c1s, rest) = rest.split_at_mut(w2 - c1);
        let (w2s, c2s) = rest.split_at_mut(c2 - w2);
        (w1s, c1s, w2s, c2s)
    }

    pub fn pack(&self, w1: &[f64], c1: &[f64], w2: &[f64], c2: &[f64]) -> Result<Vec<f64>> {
        if w1.len() != self.hidden * self.input
            || c1.len() != self.hidden
            || w2.len() != self.output * self.hidden
            || c2.len() != self.output
        {
            return Err(Error::param("network blocks do not match the layout"));
        }
        let mut x = Vec::with_capacity(self.dim());
        x.extend_from_slice(w1);
        x.extend_from_slice(c1);
        x.extend_from_slice(w2);
        x.extend_from_slice(c2);
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `ln(1 + exp(−b aᵀx)) + λ Σ x_j²/(1 + x_j²)`, labels ±1.
    LogisticNcvx { dim: usize, lambda: f64 },
    /// Softmax cross-entropy over a sigmoid hidden layer, labels `0..output`.
    ShallowNn { layout: ShallowNetLayout },
    /// `½ Σ_k h_k (x_k − a_k)²` with the sample features as the center `a`.
    Quadratic { curvature: Vec<f64> },
}

const CHUNK: usize = 256;

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^{−z})` without overflow.
#[inline]
fn softplus_neg(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

impl Objective {
    pub fn logistic(dim: usize, lambda: f64) -> Self {
        Objective::LogisticNcvx { dim, lambda }
    }

    pub fn shallow_nn(layout: ShallowNetLayout) -> Self {
        Objective::ShallowNn { layout }
    }

    pub fn quadratic(curvature: Vec<f64>) -> Self {
        Objective::Quadratic { curvature }
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self {
            Objective::LogisticNcvx { .. } => ObjectiveKind::LogisticNcvx,
            Objective::ShallowNn { .. } => ObjectiveKind::ShallowNn,
            Objective::Quadratic { .. } => ObjectiveKind::Quadratic,
        }
    }

    /// Parameter dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            Objective::LogisticNcvx { dim, .. } => *dim,
            Objective::ShallowNn { layout } => layout.dim(),
            Objective::Quadratic { curvature } => curvature.len(),
        }
    }

    fn feature_dim(&self) -> usize {
        match self {
            Objective::LogisticNcvx { dim, .. } => *dim,
            Objective::ShallowNn { layout } => layout.input,
            Objective::Quadratic { curvature } => curvature.len(),
        }
    }

    /// Largest curvature for the quadratic; `None` for the other kinds.
    pub fn known_smoothness(&self) -> Option<f64> {
        match self {
            Objective::Quadratic { curvature } => Some(curvature.iter().cloned().fold(0.0, f64::max)),
            _ => None,
        }
    }

    /// A smoothness bound over `data`: exact for the quadratic,
    /// `max ‖a‖²/4 + 2λ` for logistic, `None` for the network.
    pub fn smoothness_bound(&self, data: &[Sample]) -> Option<f64> {
        match self {
            Objective::Quadratic { .. } => self.known_smoothness(),
            Objective::LogisticNcvx { lambda, .. } => {
                let a = data.iter().map(|s| s.features.norm_sq()).fold(0.0, f64::max);
                Some(a / 4.0 + 2.0 * lambda)
            }
            Objective::ShallowNn { .. } => None,
        }
    }

    fn validate(&self, x: &[f64], s: &Sample) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::param(format!("parameter has dimension {}, expected {}", x.len(), self.dim())));
        }
        if s.features.extent() > self.feature_dim() {
            return Err(Error::Data(format!(
                "feature index {} out of range for {} features",
                s.features.extent() - 1,
                self.feature_dim()
            )));
        }
        match self {
            Objective::LogisticNcvx { .. } if s.label != 1 && s.label != -1 => {
                Err(Error::Data(format!("logistic label must be +1 or -1, got {}", s.label)))
            }
            Objective::ShallowNn { layout } if s.label < 0 || s.label as usize >= layout.output => {
                Err(Error::Data(format!("class label {} outside 0..{}", s.label, layout.output)))
            }
            _ => Ok(()),
        }
    }

    pub fn loss_sample(&self, x: &[f64], s: &Sample) -> Result<f64> {
        self.validate(x, s)?;
        Ok(match self {
            Objective::LogisticNcvx { lambda, .. } => {
                let z = s.label as f64 * s.features.dot(x);
                softplus_neg(z) + lambda * regularizer(x)
            }
            Objective::ShallowNn { layout } => {
                let (_, _, logits) = forward(layout, x, &s.features);
                let lse = log_sum_exp(&logits);
                lse - logits[s.label as usize]
            }
            Objective::Quadratic { curvature } => {
                let mut loss = 0.0;
                for_each_dense(&s.features, curvature.len(), |k, a| {
                    let r = x[k] - a;
                    loss += 0.5 * curvature[k] * r * r;
                });
                loss
            }
        })
    }

    /// Writes the exact per-sample gradient into `out` (overwriting it).
    pub fn grad_sample_into(&self, x: &[f64], s: &Sample, out: &mut [f64]) -> Result<()> {
        self.validate(x, s)?;
        if out.len() != x.len() {
            return Err(Error::param("gradient buffer has the wrong dimension"));
        }
        match self {
            Objective::LogisticNcvx { lambda, .. } => {
                regularizer_grad(x, *lambda, out);
                add_logistic_data_grad(x, s, 1.0, out);
            }
            Objective::ShallowNn { layout } => nn_backprop(layout, x, s, out),
            Objective::Quadratic { curvature } => {
                for_each_dense(&s.features, curvature.len(), |k, a| {
                    out[k] = curvature[k] * (x[k] - a);
                });
            }
        }
        Ok(())
    }

    pub fn grad_sample(&self, x: &[f64], s: &Sample) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.grad_sample_into(x, s, &mut out)?;
        Ok(out)
    }

    /// Unweighted mean of per-sample losses.
    pub fn loss_full(&self, x: &[f64], data: &[Sample]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::param("loss over an empty dataset"));
        }
        let partial: Result<Vec<f64>> = data
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(|s| self.loss_sample(x, s)).sum::<Result<f64>>())
            .collect();
        let total = pairwise_scalar(partial?);
        Ok(total / data.len() as f64)
    }

    /// Unweighted mean of unclipped per-sample gradients.
    ///
    /// Chunks are reduced with a fixed pairwise tree, so the result does not
    /// depend on the number of worker threads.
    pub fn grad_full(&self, x: &[f64], data: &[Sample]) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::param("gradient over an empty dataset"));
        }
        let d = x.len();
        let parts: Result<Vec<Vec<f64>>> = data
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; d];
                match self {
                    Objective::LogisticNcvx { .. } => {
                        for s in chunk {
                            self.validate(x, s)?;
                            add_logistic_data_grad(x, s, 1.0, &mut acc);
                        }
                    }
                    _ => {
                        let mut buf = vec![0.0; d];
                        for s in chunk {
                            self.grad_sample_into(x, s, &mut buf)?;
                            axpy(1.0, &buf, &mut acc);
                        }
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut g = pairwise_sum(parts?, d);
        let inv = 1.0 / data.len() as f64;
        g.iter_mut().for_each(|v| *v *= inv);
        if let Objective::LogisticNcvx { lambda, .. } = self {
            // the regularizer is shared by every sample, add it once
            let mut reg = vec![0.0; d];
            regularizer_grad(x, *lambda, &mut reg);
            axpy(1.0, &reg, &mut g);
        }
        Ok(g)
    }

    /// Fraction of samples whose arg-max class equals the label (network
    /// only).
    pub fn accuracy(&self, x: &[f64], data: &[Sample]) -> Result<Option<f64>> {
        let Objective::ShallowNn { layout } = self else {
            return Ok(None);
        };
        if data.is_empty() {
            return Ok(None);
        }
        let correct: Result<usize> = data
            .par_iter()
            .map(|s| {
                self.validate(x, s)?;
                let (_, _, logits) = forward(layout, x, &s.features);
                let arg = logits
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
                    .0;
                Ok(usize::from(arg == s.label as usize))
            })
            .sum();
        Ok(Some(correct? as f64 / data.len() as f64))
    }
}

fn pairwise_scalar(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    while v.len() > 1 {
        v = v.chunks(2).map(|c| c.iter().sum()).collect();
    }
    v[0]
}

/// Visits every coordinate `k < d` with the (possibly implicit zero) value
/// of `a` at `k`.
fn for_each_dense(a: &SparseVec, d: usize, mut f: impl FnMut(usize, f64)) {
    let mut it = a.iter().peekable();
    for k in 0..d {
        let v = match it.peek() {
            Some(&(j, v)) if j == k => {
                it.next();
                v
            }
            _ => 0.0,
        };
        f(k, v);
    }
}

fn regularizer(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v / (1.0 + v * v)).sum()
}

/// Overwrites `out` with `2λ x_j / (1 + x_j²)²`.
fn regularizer_grad(x: &[f64], lambda: f64, out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        let den = 1.0 + v * v;
        *o = 2.0 * lambda * v / (den * den);
    }
}

/// `out += scale · (−b a σ(−b aᵀx))`
fn add_logistic_data_grad(x: &[f64], s: &Sample, scale: f64, out: &mut [f64]) {
    let b = s.label as f64;
    let z = b * s.features.dot(x);
    let coef = -b * sigmoid(-z) * scale;
    for (j, a) in s.features.iter() {
        out[j] += coef * a;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Returns `(z1, h1, logits)`.
fn forward(layout: &ShallowNetLayout, x: &[f64], a: &SparseVec) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (w1, c1, w2, c2) = layout.unpack(x);
    let z1: Vec<f64> = (0..layout.hidden)
        .map(|r| {
            let row = &w1[r * layout.input..(r + 1) * layout.input];
            c1[r] + a.dot(row)
        })
        .collect();
    let h1: Vec<f64> = z1.iter().map(|&z| sigmoid(z)).collect();
    let logits: Vec<f64> = (0..layout.output)
        .map(|o| {
            let row = &w2[o * layout.hidden..(o + 1) * layout.hidden];
            c2[o] + row.iter().zip(&h1).map(|(w, h)| w * h).sum::<f64>()
        })
        .collect();
    (z1, h1, logits)
}

fn nn_backprop(layout: &ShallowNetLayout, x: &[f64], s: &Sample, out: &mut [f64]) {
    let (_, h1, logits) = forward(layout, x, &s.features);
    let lse = log_sum_exp(&logits);
    let mut dz2: Vec<f64> = logits.iter().map(|&z| (z - lse).exp()).collect();
    dz2[s.label as usize] -= 1.0;

    let (_, _, w2, _) = layout.unpack(x);
    let dz1: Vec<f64> = (0..layout.hidden)
        .map(|r| {
            let back: f64 = (0..layout.output).map(|o| w2[o * layout.hidden + r] * dz2[o]).sum();
            back * h1[r] * (1.0 - h1[r])
        })
        .collect();

    out.iter_mut().for_each(|v| *v = 0.0);
    let (gw1, gc1, gw2, gc2) = layout.unpack_mut(out);
    for r in 0..layout.hidden {
        let row = &mut gw1[r * layout.input..(r + 1) * layout.input];
        for (j, a) in s.features.iter() {
            row[j] = dz1[r] * a;
        }
        gc1[r] = dz1[r];
    }
    for o in 0..layout.output {
        let row = &mut gw2[o * layout.hidden..(o + 1) * layout.hidden];
        for (w, h) in row.iter_mut().zip(&h1) {
            *w = dz2[o] * h;
        }
        gc2[o] = dz2[o];
    }
}
