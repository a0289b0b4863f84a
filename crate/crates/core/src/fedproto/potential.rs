use crate::error::{Error, Result};
use crate::linalg::{dist_sq, pairwise_sum};
use crate::objectives::{Objective, Sample};

use super::{ClientState, ServerState};

/// Lyapunov diagnostics at the server iterate. `phi_hat` omits `f*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub phi_hat: f64,
    pub loss: f64,
    /// `(1/n) Σ ‖∇f_i(x) − s_i‖²`.
    pub shift_error: f64,
    /// Mean estimator anchor distance.
    pub delta: f64,
}

/// `Φ̂ = f(x) + α L Δ + (β/L) S` with unclipped local gradients.
///
/// A SAGA client without tracked points has no Δ; that is an error unless
/// `alpha == 0`.
pub fn compute_potential(
    srv: &ServerState,
    clients: &[ClientState],
    obj: &Objective,
    shards: &[Vec<Sample>],
    alpha: f64,
    beta: f64,
    smoothness: f64,
) -> Result<Potential> {
    let n = clients.len();
    if n == 0 || shards.len() != n {
        return Err(Error::param("potential needs one shard per client"));
    }
    if !(smoothness > 0.0) {
        return Err(Error::param("smoothness must be positive"));
    }
    let x = &srv.x;
    let mut losses = Vec::with_capacity(n);
    let mut gaps = Vec::with_capacity(n);
    let mut deltas = Vec::with_capacity(n);
    for (c, shard) in clients.iter().zip(shards) {
        losses.push(vec![obj.loss_full(x, shard)?]);
        let g = obj.grad_full(x, shard)?;
        gaps.push(vec![dist_sq(&g, &c.shift)]);
        let delta = match c.est.anchor_distance(x) {
            Some(v) => v,
            None if alpha == 0.0 => 0.0,
            None => return Err(Error::State(format!("client {} does not track anchor points", c.id))),
        };
        deltas.push(vec![delta]);
    }
    let inv_n = 1.0 / n as f64;
    let loss = pairwise_sum(losses, 1)[0] * inv_n;
    let shift_error = pairwise_sum(gaps, 1)[0] * inv_n;
    let delta = pairwise_sum(deltas, 1)[0] * inv_n;
    let phi_hat = loss + alpha * smoothness * delta + beta / smoothness * shift_error;
    Ok(Potential { phi_hat, loss, shift_error, delta })
}
