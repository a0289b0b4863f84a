//! Local gradient estimators: GD, SGD, SVRG and SAGA.
//!
//! Every per-sample gradient an estimator touches is clipped first, written
//! `ĝ_j(·) = clip(∇f_j(·), G)`. Minibatches are Poisson: each local sample is
//! included independently with probability `q = b/m`, and sums are divided by
//! the nominal `b`, not the realized count. Under this sampling every
//! estimator is unbiased for the clipped local mean `(1/m) Σ_j ĝ_j(x)`.
//!
//! | kind | estimate                                   | minibatch part | full part |
//! |------|--------------------------------------------|----------------|-----------|
//! | sgd  | `(1/b) Σ_S ĝ_j(x)`                         | `ĝ_j(x)`       | 0         |
//! | svrg | `(1/b) Σ_S (ĝ_j(x) − ĝ_j(w)) + μ`          | difference     | `ĝ_j(w)`  |
//! | saga | `(1/b) Σ_S (ĝ_j(x) − T_j) + mean(T)`       | difference     | `T_j`     |

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dist_sq};
use crate::objectives::{Objective, Sample};
use crate::privacy::{clip_in_place, SensitivityPair};
use crate::streams::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Gd,
    Sgd,
    Svrg,
    Saga,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Gd => "gd",
            EstimatorKind::Sgd => "sgd",
            EstimatorKind::Svrg => "svrg",
            EstimatorKind::Saga => "saga",
        }
    }
}

/// Norm bounds on the two estimator parts for clip threshold `clip`.
pub fn sensitivity_of(kind: EstimatorKind, clip: f64) -> SensitivityPair {
    match kind {
        EstimatorKind::Gd | EstimatorKind::Sgd => SensitivityPair { ga: clip, gb: 0.0 },
        EstimatorKind::Svrg | EstimatorKind::Saga => SensitivityPair { ga: 2.0 * clip, gb: clip },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Nominal minibatch size `b`; ignored for GD, which always uses `m`.
    pub batch: usize,
    /// SVRG snapshot refresh probability.
    pub snapshot_prob: f64,
    /// Keep SAGA anchor points so the table distance can be reported.
    pub track_points: bool,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind, batch: usize) -> Self {
        Self { kind, batch, snapshot_prob: 0.0, track_points: false }
    }

    pub fn with_snapshot_prob(mut self, p: f64) -> Self {
        self.snapshot_prob = p;
        self
    }

    pub fn with_tracked_points(mut self) -> Self {
        self.track_points = true;
        self
    }
}

/// Output of one estimator query.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub g_tilde: Vec<f64>,
    pub sampled: Vec<usize>,
    pub grad_evals: u64,
}

#[derive(Debug, Clone)]
enum Memory {
    Plain,
    Svrg {
        snapshot: Vec<f64>,
        anchor: Vec<f64>,
    },
    Saga {
        table: Vec<f64>,
        table_mean: Vec<f64>,
        points: Option<Vec<f64>>,
        since_resync: usize,
    },
}

/// Table means are recomputed from scratch after this many incremental
/// SAGA updates.
const SAGA_RESYNC: usize = 1024;

/// Per-client estimator state, bound at construction to one local dataset
/// of size `m` and parameter dimension `d`.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    kind: EstimatorKind,
    batch: usize,
    snapshot_prob: f64,
    m: usize,
    dim: usize,
    memory: Memory,
}

fn clipped_grad_into(obj: &Objective, x: &[f64], s: &Sample, clip: f64, out: &mut [f64]) -> Result<()> {
    obj.grad_sample_into(x, s, out)?;
    clip_in_place(out, clip);
    Ok(())
}

/// `(1/m) Σ_j ĝ_j(x)` over the whole local dataset.
pub fn clipped_mean(obj: &Objective, x: &[f64], data: &[Sample], clip: f64) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; x.len()];
    let mut buf = vec![0.0; x.len()];
    for s in data {
        clipped_grad_into(obj, x, s, clip, &mut buf)?;
        axpy(1.0, &buf, &mut acc);
    }
    let inv = 1.0 / data.len() as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    Ok(acc)
}

/// Draws a Poisson subset of `0..m` with inclusion probability `q` by
/// geometric gap skipping.
pub fn poisson_subset(m: usize, q: f64, stream: &mut Stream) -> Vec<usize> {
    if q >= 1.0 {
        return (0..m).collect();
    }
    if q <= 0.0 {
        return Vec::new();
    }
    let log_miss = (1.0 - q).ln();
    let mut out = Vec::with_capacity(((m as f64) * q * 1.5) as usize + 4);
    let mut next = 0usize;
    loop {
        let u: f64 = stream.gen();
        let gap = ((1.0 - u).ln() / log_miss).floor();
        if !gap.is_finite() || gap >= (m - next) as f64 {
            break;
        }
        next += gap as usize;
        out.push(next);
        next += 1;
        if next >= m {
            break;
        }
    }
    out
}

impl EstimatorState {
    /// Binds the estimator to a client's data at the initial point `x0`.
    /// Returns the state and the number of per-sample gradients spent.
    pub fn init(
        cfg: EstimatorConfig,
        x0: &[f64],
        data: &[Sample],
        obj: &Objective,
        clip: f64,
    ) -> Result<(Self, u64)> {
        let m = data.len();
        if m == 0 {
            return Err(Error::param("estimator needs a nonempty local dataset"));
        }
        if x0.len() != obj.dim() {
            return Err(Error::param("initial point dimension does not match the objective"));
        }
        if !(clip > 0.0) {
            return Err(Error::param(format!("clip threshold must be positive, got {clip}")));
        }
        let batch = match cfg.kind {
            EstimatorKind::Gd => m,
            _ => {
                if cfg.batch == 0 || cfg.batch > m {
                    return Err(Error::param(format!("batch size must lie in 1..={m}, got {}", cfg.batch)));
                }
                cfg.batch
            }
        };
        if cfg.kind == EstimatorKind::Svrg && !(0.0..=1.0).contains(&cfg.snapshot_prob) {
            return Err(Error::param("snapshot probability must lie in [0, 1]"));
        }
        let d = x0.len();
        let (memory, evals) = match cfg.kind {
            EstimatorKind::Gd | EstimatorKind::Sgd => (Memory::Plain, 0),
            EstimatorKind::Svrg => {
                let anchor = clipped_mean(obj, x0, data, clip)?;
                (Memory::Svrg { snapshot: x0.to_vec(), anchor }, m as u64)
            }
            EstimatorKind::Saga => {
                let mut table = vec![0.0; m * d];
                for (row, s) in table.chunks_mut(d).zip(data) {
                    clipped_grad_into(obj, x0, s, clip, row)?;
                }
                let table_mean = row_mean(&table, d, m);
                let points = cfg.track_points.then(|| x0.repeat(m));
                (Memory::Saga { table, table_mean, points, since_resync: 0 }, m as u64)
            }
        };
        Ok((
            Self { kind: cfg.kind, batch, snapshot_prob: cfg.snapshot_prob, m, dim: d, memory },
            evals,
        ))
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn local_size(&self) -> usize {
        self.m
    }

    /// Poisson inclusion rate `b/m`.
    pub fn sampling_rate(&self) -> f64 {
        self.batch as f64 / self.m as f64
    }

    fn check_bound(&self, x: &[f64], data: &[Sample]) -> Result<()> {
        if data.len() != self.m || x.len() != self.dim {
            return Err(Error::State(format!(
                "estimator bound to m={}, d={} but queried with m={}, d={}",
                self.m,
                self.dim,
                data.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Draws a minibatch from `stream` and evaluates the estimator at `x`.
    pub fn estimate(
        &self,
        x: &[f64],
        data: &[Sample],
        obj: &Objective,
        clip: f64,
        stream: &mut Stream,
    ) -> Result<EstimateResult> {
        self.check_bound(x, data)?;
        let sampled = match self.kind {
            EstimatorKind::Gd => (0..self.m).collect(),
            _ => poisson_subset(self.m, self.sampling_rate(), stream),
        };
        self.estimate_with(x, data, obj, clip, sampled)
    }

    /// Evaluates the estimator for a given minibatch.
    pub fn estimate_with(
        &self,
        x: &[f64],
        data: &[Sample],
        obj: &Objective,
        clip: f64,
        sampled: Vec<usize>,
    ) -> Result<EstimateResult> {
        self.check_bound(x, data)?;
        if sampled.iter().any(|&j| j >= self.m) {
            return Err(Error::param("minibatch index out of range"));
        }
        let d = self.dim;
        let inv_b = 1.0 / self.batch as f64;
        let mut g = vec![0.0; d];
        let mut buf = vec![0.0; d];
        let mut evals = 0u64;
        match &self.memory {
            Memory::Plain => {
                for &j in &sampled {
                    clipped_grad_into(obj, x, &data[j], clip, &mut buf)?;
                    axpy(inv_b, &buf, &mut g);
                    evals += 1;
                }
            }
            Memory::Svrg { snapshot, anchor } => {
                for &j in &sampled {
                    clipped_grad_into(obj, x, &data[j], clip, &mut buf)?;
                    axpy(inv_b, &buf, &mut g);
                    clipped_grad_into(obj, snapshot, &data[j], clip, &mut buf)?;
                    axpy(-inv_b, &buf, &mut g);
                    evals += 2;
                }
                axpy(1.0, anchor, &mut g);
            }
            Memory::Saga { table, table_mean, .. } => {
                for &j in &sampled {
                    clipped_grad_into(obj, x, &data[j], clip, &mut buf)?;
                    axpy(inv_b, &buf, &mut g);
                    axpy(-inv_b, &table[j * d..(j + 1) * d], &mut g);
                    evals += 1;
                }
                axpy(1.0, table_mean, &mut g);
            }
        }
        Ok(EstimateResult { g_tilde: g, sampled, grad_evals: evals })
    }

    /// Moves the estimator memory forward after the round at `x_t`.
    /// Returns the per-sample gradients spent.
    pub fn advance(
        &mut self,
        x_t: &[f64],
        sampled: &[usize],
        data: &[Sample],
        obj: &Objective,
        clip: f64,
        stream: &mut Stream,
    ) -> Result<u64> {
        self.check_bound(x_t, data)?;
        let d = self.dim;
        let m = self.m;
        match &mut self.memory {
            Memory::Plain => Ok(0),
            Memory::Svrg { snapshot, anchor } => {
                let coin: f64 = stream.gen();
                if coin < self.snapshot_prob {
                    snapshot.copy_from_slice(x_t);
                    *anchor = clipped_mean(obj, x_t, data, clip)?;
                    Ok(m as u64)
                } else {
                    Ok(0)
                }
            }
            Memory::Saga { table, table_mean, points, since_resync } => {
                let mut buf = vec![0.0; d];
                let inv_m = 1.0 / m as f64;
                for &j in sampled {
                    if j >= m {
                        return Err(Error::param("minibatch index out of range"));
                    }
                    clipped_grad_into(obj, x_t, &data[j], clip, &mut buf)?;
                    let row = &mut table[j * d..(j + 1) * d];
                    for k in 0..d {
                        table_mean[k] += (buf[k] - row[k]) * inv_m;
                    }
                    row.copy_from_slice(&buf);
                    if let Some(p) = points {
                        p[j * d..(j + 1) * d].copy_from_slice(x_t);
                    }
                }
                *since_resync += 1;
                if *since_resync >= SAGA_RESYNC {
                    *table_mean = row_mean(table, d, m);
                    *since_resync = 0;
                }
                Ok(sampled.len() as u64)
            }
        }
    }

    /// The variance-tracking distance: `‖x − w‖²` for SVRG, the mean of
    /// `‖x − w_j‖²` over the table for SAGA (when points are tracked), `0`
    /// for GD and SGD.
    pub fn anchor_distance(&self, x: &[f64]) -> Option<f64> {
        match &self.memory {
            Memory::Plain => Some(0.0),
            Memory::Svrg { snapshot, .. } => Some(dist_sq(x, snapshot)),
            Memory::Saga { points: Some(p), .. } => {
                Some(p.chunks(self.dim).map(|w| dist_sq(x, w)).sum::<f64>() / self.m as f64)
            }
            Memory::Saga { points: None, .. } => None,
        }
    }

    pub fn snapshot(&self) -> Option<&[f64]> {
        match &self.memory {
            Memory::Svrg { snapshot, .. } => Some(snapshot),
            _ => None,
        }
    }

    pub fn anchor_mean(&self) -> Option<&[f64]> {
        match &self.memory {
            Memory::Svrg { anchor, .. } => Some(anchor),
            Memory::Saga { table_mean, .. } => Some(table_mean),
            Memory::Plain => None,
        }
    }

    /// SAGA table row `j`.
    pub fn table_row(&self, j: usize) -> Option<&[f64]> {
        match &self.memory {
            Memory::Saga { table, .. } if j < self.m => Some(&table[j * self.dim..(j + 1) * self.dim]),
            _ => None,
        }
    }

    /// Exact mean of the SAGA table, recomputed from the rows.
    pub fn table_mean_exact(&self) -> Option<Vec<f64>> {
        match &self.memory {
            Memory::Saga { table, .. } => Some(row_mean(table, self.dim, self.m)),
            _ => None,
        }
    }
}

fn row_mean(table: &[f64], d: usize, m: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for row in table.chunks(d) {
        axpy(1.0, row, &mut mean);
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    mean
}
