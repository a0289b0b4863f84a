//! Client and server state machines for direct compression and shifted
//! compression, plus the driver that runs full-participation rounds.

mod bits;
mod hyper;
mod potential;

pub use bits::{bits_per_message, bits_per_round, index_bits, BitAccounting, BitMode};
pub use hyper::{derive_hyperparams, shift_stepsize, tau_of, HyperInputs, HyperParams, Recipe};
pub use potential::{compute_potential, Potential};

use rayon::prelude::*;

use crate::compress::{compress, CompressedVector, CompressorSpec};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorState};
use crate::linalg::{axpy, pairwise_sum};
use crate::objectives::{Objective, Sample};
use crate::privacy::{perturb_in_place, NoiseSpec};
use crate::streams::RoundStreams;

/// Whether clients compress the perturbed gradient directly or its
/// difference to a learned shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Direct,
    Shifted,
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub id: usize,
    pub est: EstimatorState,
    pub shift: Vec<f64>,
}

impl ClientState {
    pub fn new(id: usize, est: EstimatorState, dim: usize) -> Self {
        Self { id, est, shift: vec![0.0; dim] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub client: usize,
    pub payload: CompressedVector,
}

impl RoundMessage {
    pub fn payload_bits(&self) -> u64 {
        self.payload.payload_bits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub t: u64,
    pub n_clients: usize,
    pub bits_cumulative: u64,
    pub grad_evals_cumulative: u64,
}

/// Per-round settings shared by every client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundConfig {
    pub protocol: Protocol,
    pub noise: NoiseSpec,
    pub comp: CompressorSpec,
    pub gamma: f64,
    pub bits: BitAccounting,
}

/// One client's half of a round at the broadcast iterate `x`.
///
/// Returns the message and the per-sample gradients spent, including any
/// estimator refresh triggered by `advance`.
pub fn client_round(
    client: &mut ClientState,
    x: &[f64],
    obj: &Objective,
    data: &[Sample],
    cfg: &RoundConfig,
    streams: &mut RoundStreams,
) -> Result<(RoundMessage, u64)> {
    let d = client.shift.len();
    if x.len() != d {
        return Err(Error::Protocol(format!(
            "client {}: iterate has dimension {}, shift has {d}",
            client.id,
            x.len()
        )));
    }
    let clip = cfg.noise.clip;
    let est = client.est.estimate(x, data, obj, clip, &mut streams.sample)?;
    let mut g = est.g_tilde;
    perturb_in_place(&mut g, cfg.noise.sigma, &mut streams.noise);
    if cfg.protocol == Protocol::Shifted {
        axpy(-1.0, &client.shift, &mut g);
    }
    let mut payload = compress(cfg.comp, &g, &mut streams.compress)?;
    payload.payload_bits = bits_per_message(cfg.comp, d, cfg.bits)?;
    if cfg.protocol == Protocol::Shifted {
        payload.add_into(&mut client.shift, cfg.gamma);
    }
    let refresh = client.est.advance(x, &est.sampled, data, obj, clip, &mut streams.snapshot)?;
    Ok((RoundMessage { client: client.id, payload }, est.grad_evals + refresh))
}

impl ServerState {
    pub fn new(x0: Vec<f64>, n_clients: usize) -> Self {
        let d = x0.len();
        Self { x: x0, s: vec![0.0; d], t: 0, n_clients, bits_cumulative: 0, grad_evals_cumulative: 0 }
    }

    /// `(1/n) Σ v_i` in client-id order. Checks that every client sent
    /// exactly one message of the right dimension.
    pub fn mean_message(&self, msgs: &[RoundMessage]) -> Result<Vec<f64>> {
        let n = self.n_clients;
        let d = self.x.len();
        let mut slot: Vec<Option<&RoundMessage>> = vec![None; n];
        for m in msgs {
            if m.client >= n {
                return Err(Error::Protocol(format!("message from unknown client {}", m.client)));
            }
            if slot[m.client].is_some() {
                return Err(Error::Protocol(format!("duplicate message from client {}", m.client)));
            }
            if m.payload.dim != d {
                return Err(Error::Protocol(format!(
                    "client {} sent dimension {}, expected {d}",
                    m.client, m.payload.dim
                )));
            }
            slot[m.client] = Some(m);
        }
        if let Some(missing) = slot.iter().position(Option::is_none) {
            return Err(Error::Protocol(format!("no message from client {missing}")));
        }
        let parts: Vec<Vec<f64>> = slot.iter().map(|m| m.unwrap().payload.densify()).collect();
        let mut mean = pairwise_sum(parts, d);
        let inv_n = 1.0 / n as f64;
        mean.iter_mut().for_each(|v| *v *= inv_n);
        Ok(mean)
    }

    /// The update direction `v` the server would apply for these messages.
    pub fn direction(&self, msgs: &[RoundMessage], protocol: Protocol) -> Result<Vec<f64>> {
        let mut v = self.mean_message(msgs)?;
        if protocol == Protocol::Shifted {
            axpy(1.0, &self.s, &mut v);
        }
        Ok(v)
    }

    pub fn step(&mut self, msgs: &[RoundMessage], eta: f64, gamma: f64, protocol: Protocol) -> Result<()> {
        let mean = self.mean_message(msgs)?;
        match protocol {
            Protocol::Direct => axpy(-eta, &mean, &mut self.x),
            Protocol::Shifted => {
                axpy(-eta, &self.s, &mut self.x);
                axpy(-eta, &mean, &mut self.x);
                axpy(gamma, &mean, &mut self.s);
            }
        }
        self.bits_cumulative += msgs.iter().map(RoundMessage::payload_bits).sum::<u64>();
        self.t += 1;
        Ok(())
    }
}

/// Free-function form of [`ServerState::step`].
pub fn server_step(
    srv: &mut ServerState,
    msgs: &[RoundMessage],
    eta: f64,
    gamma: f64,
    protocol: Protocol,
) -> Result<()> {
    srv.step(msgs, eta, gamma, protocol)
}

/// A full-participation federation: one objective, `n` equal-size shards,
/// their clients and the server.
#[derive(Debug, Clone)]
pub struct Federation {
    pub objective: Objective,
    pub shards: Vec<Vec<Sample>>,
    pub clients: Vec<ClientState>,
    pub server: ServerState,
    pub round: RoundConfig,
    pub eta: f64,
    pub seed: u64,
    /// Run client rounds on the rayon pool. Output does not depend on it.
    pub parallel: bool,
}

impl Federation {
    pub fn new(
        objective: Objective,
        shards: Vec<Vec<Sample>>,
        x0: Vec<f64>,
        est: EstimatorConfig,
        round: RoundConfig,
        eta: f64,
        seed: u64,
    ) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::param("federation needs at least one client"));
        }
        let m = shards[0].len();
        if m == 0 || shards.iter().any(|s| s.len() != m) {
            return Err(Error::Data("client shards must be nonempty and of equal size".into()));
        }
        let d = objective.dim();
        if x0.len() != d {
            return Err(Error::param(format!("x0 has dimension {}, objective has {d}", x0.len())));
        }
        let clip = round.noise.clip;
        let mut clients = Vec::with_capacity(shards.len());
        let mut evals = 0u64;
        for (i, shard) in shards.iter().enumerate() {
            let (state, e) = EstimatorState::init(est, &x0, shard, &objective, clip)?;
            evals += e;
            clients.push(ClientState::new(i, state, d));
        }
        let mut server = ServerState::new(x0, shards.len());
        server.grad_evals_cumulative = evals;
        Ok(Self { objective, shards, clients, server, round, eta, seed, parallel: false })
    }

    pub fn n_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn local_size(&self) -> usize {
        self.shards[0].len()
    }

    fn client_messages(&mut self, round: u64) -> Result<(Vec<RoundMessage>, u64)> {
        let x = &self.server.x;
        let obj = &self.objective;
        let cfg = &self.round;
        let seed = self.seed;
        let run = |(c, shard): (&mut ClientState, &Vec<Sample>)| {
            let mut streams = RoundStreams::new(seed, c.id, round);
            client_round(c, x, obj, shard, cfg, &mut streams)
        };
        let out: Vec<Result<(RoundMessage, u64)>> = if self.parallel {
            self.clients.par_iter_mut().zip(self.shards.par_iter()).map(run).collect()
        } else {
            self.clients.iter_mut().zip(self.shards.iter()).map(run).collect()
        };
        let mut msgs = Vec::with_capacity(out.len());
        let mut evals = 0;
        for r in out {
            let (m, e) = r?;
            msgs.push(m);
            evals += e;
        }
        Ok((msgs, evals))
    }

    /// Runs one round and returns the messages the server received.
    pub fn step(&mut self) -> Result<Vec<RoundMessage>> {
        let t = self.server.t;
        let (msgs, evals) = self.client_messages(t)?;
        self.server.step(&msgs, self.eta, self.round.gamma, self.round.protocol)?;
        self.server.grad_evals_cumulative += evals;
        Ok(msgs)
    }

    pub fn run(&mut self, rounds: u64) -> Result<()> {
        for _ in 0..rounds {
            self.step()?;
        }
        Ok(())
    }

    /// Samples the aggregate direction `v` for the current state under the
    /// streams of round `round`, leaving the federation untouched.
    pub fn sample_direction(&self, round: u64) -> Result<Vec<f64>> {
        let mut probe = self.clone();
        probe.parallel = false;
        let (msgs, _) = probe.client_messages(round)?;
        self.server.direction(&msgs, self.round.protocol)
    }

    /// `‖s − (1/n) Σ s_i‖`.
    pub fn shift_gap(&self) -> f64 {
        let d = self.server.x.len();
        let parts: Vec<Vec<f64>> = self.clients.iter().map(|c| c.shift.clone()).collect();
        let mean = pairwise_sum(parts, d);
        let inv_n = 1.0 / self.n_clients() as f64;
        self.server
            .s
            .iter()
            .zip(&mean)
            .map(|(s, m)| (s - m * inv_n).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Unclipped `∇f(x) = (1/n) Σ ∇f_i(x)`.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let parts = self
            .shards
            .iter()
            .map(|s| self.objective.grad_full(x, s))
            .collect::<Result<Vec<_>>>()?;
        let mut g = pairwise_sum(parts, x.len());
        let inv_n = 1.0 / self.n_clients() as f64;
        g.iter_mut().for_each(|v| *v *= inv_n);
        Ok(g)
    }

    /// Clipped counterpart of [`Self::full_gradient`]: the mean each estimator targets.
    pub fn clipped_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let clip = self.round.noise.clip;
        let parts = self
            .shards
            .iter()
            .map(|s| crate::estimators::clipped_mean(&self.objective, x, s, clip))
            .collect::<Result<Vec<_>>>()?;
        let mut g = pairwise_sum(parts, x.len());
        let inv_n = 1.0 / self.n_clients() as f64;
        g.iter_mut().for_each(|v| *v *= inv_n);
        Ok(g)
    }

    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for s in &self.shards {
            acc += self.objective.loss_full(x, s)?;
        }
        Ok(acc / self.n_clients() as f64)
    }
}
