//! Parameter recipes for the direct-compression baseline and the shifted
//! GD/SGD/SVRG/SAGA variants.
//!
//! Shared quantities: `τ = (1+ω)^{3/2}/√n` and the shift stepsize
//! `γ = √((1+2ω) / (2(1+ω)³))`. The round counts involve the unknown
//! calibration constant `c` and the initial potential `Φ₀`, so they are
//! advisory values only.

use crate::error::{Error, Result};
use crate::estimators::{sensitivity_of, EstimatorKind};
use crate::privacy::{sigma_formula, PrivacyBudget, SensitivityPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    Cor1Sgd,
    Cor1Gd,
    Cor2Svrg,
    Cor3Saga,
    Thm1CdpSgd,
}

impl Recipe {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "cor1_sgd" => Recipe::Cor1Sgd,
            "cor1_gd" => Recipe::Cor1Gd,
            "cor2_svrg" => Recipe::Cor2Svrg,
            "cor3_saga" => Recipe::Cor3Saga,
            "thm1_cdpsgd" => Recipe::Thm1CdpSgd,
            other => return Err(Error::param(format!("unknown recipe '{other}'"))),
        })
    }

    pub fn estimator(self) -> EstimatorKind {
        match self {
            Recipe::Cor1Sgd | Recipe::Thm1CdpSgd => EstimatorKind::Sgd,
            Recipe::Cor1Gd => EstimatorKind::Gd,
            Recipe::Cor2Svrg => EstimatorKind::Svrg,
            Recipe::Cor3Saga => EstimatorKind::Saga,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperInputs {
    pub n: usize,
    pub omega: f64,
    pub m: usize,
    pub d: usize,
    pub smoothness: f64,
    pub clip: f64,
    pub budget: PrivacyBudget,
    pub c: f64,
    /// Initial potential (or `f(x⁰) − f*` for the baseline); only enters `T`.
    pub phi0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub batch: usize,
    /// SVRG refresh probability; 0 where unused.
    pub p: f64,
    /// Advisory round count from the recipe's formula.
    pub rounds: f64,
    /// Noise std at `⌈rounds⌉` from the closed-form rule.
    pub sigma: f64,
}

pub fn shift_stepsize(omega: f64) -> f64 {
    ((1.0 + 2.0 * omega) / (2.0 * (1.0 + omega).powi(3))).sqrt()
}

pub fn tau_of(omega: f64, n: usize) -> f64 {
    (1.0 + omega).powf(1.5) / (n as f64).sqrt()
}

/// `⌊m^{2/3}⌋`-style batch sizes. The cube root is exact for perfect cubes,
/// and a relative nudge absorbs rounding just below an integer.
fn floor_batch(v: f64, m: usize) -> usize {
    let f = (v * (1.0 + 1e-12)).floor();
    (f.max(1.0) as usize).min(m)
}

fn m_two_thirds(m: usize) -> f64 {
    let r = (m as f64).cbrt();
    r * r
}

pub fn derive_hyperparams(recipe: Recipe, inp: &HyperInputs) -> Result<HyperParams> {
    let HyperInputs { n, omega, m, d, smoothness: l, clip: g, budget, c, phi0 } = *inp;
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::param("n, m and d must be positive"));
    }
    if !(omega >= 0.0) || !(l > 0.0) || !(g > 0.0) || !g.is_finite() || !(c > 0.0) || !(phi0 > 0.0) {
        return Err(Error::param("omega >= 0 and L, G (finite), c, phi0 > 0 are required"));
    }
    let mf = m as f64;
    let df = d as f64;
    let eps = budget.epsilon;
    let log_inv_delta = (1.0 / budget.delta).ln();
    let tau = tau_of(omega, n);
    let gamma = shift_stepsize(omega);
    let min_tau = 1f64.min(1.0 / tau);

    let cor1_batch = |beta: f64| {
        let v = mf * eps * g * beta.sqrt() / ((1.0 + omega) * l * df * log_inv_delta).sqrt();
        floor_batch(v.min(mf), m)
    };

    let (eta, gamma, beta, alpha, batch, p, rounds) = match recipe {
        Recipe::Cor1Sgd | Recipe::Cor1Gd => {
            let beta = tau / (2.0 * (1.0 + omega));
            let eta = 1.0 / ((1.0 + 2.0 * tau) * l);
            let b = if recipe == Recipe::Cor1Gd { m } else { cor1_batch(beta) };
            let bf = b as f64;
            let t1 = mf * eps * (8.0 * (1.0 + omega) * l * phi0).sqrt()
                / (3.0 * beta * c * df * g * g * log_inv_delta).sqrt();
            let t2 = 4.0 * (mf - bf) * mf * mf * eps * eps / (c * mf * bf * df * log_inv_delta);
            (eta, gamma, beta, 0.0, b, 0.0, t1.max(t2))
        }
        Recipe::Cor2Svrg => {
            let b = floor_batch(m_two_thirds(m) / 4.0, m);
            let bf = b as f64;
            let p = bf / mf;
            let beta = p.powf(4.0 / 3.0) * bf.powf(2.0 / 3.0) * (1.0 + omega).powi(2) * min_tau * min_tau / n as f64;
            let eta = p.powf(2.0 / 3.0) * bf.cbrt() * min_tau / (2.0 * l);
            let alpha = 3.0 * beta / ((1.0 + omega) * bf * p);
            let t = mf * eps * ((1.0 + omega) * l * phi0).sqrt() / (3.0 * beta * c * df * g * g * log_inv_delta).sqrt();
            (eta, gamma, beta, alpha, b, p, t)
        }
        Recipe::Cor3Saga => {
            let b = floor_batch(3.0 * m_two_thirds(m), m);
            let bf = b as f64;
            let beta = (1.0 + omega).powi(2) * min_tau * min_tau / (3.0 * n as f64);
            let eta = min_tau / (3.0 * l);
            let alpha = 3.0 * beta * mf / ((1.0 + omega) * bf * bf);
            let t = mf * eps * (n as f64 * l * phi0).sqrt()
                / ((1.0 + omega) * c * df * g * g * log_inv_delta * min_tau * min_tau).sqrt();
            (eta, gamma, beta, alpha, b, 0.0, t)
        }
        Recipe::Thm1CdpSgd => {
            let nf = n as f64;
            let eta = (1.0 / l).min((nf * phi0 * c * df * log_inv_delta).sqrt() / (g * mf * eps * ((1.0 + omega) * l).sqrt()));
            let t1 = mf * eps * (nf * l * phi0).sqrt() / (g * ((1.0 + omega) * c * df * log_inv_delta).sqrt());
            let t2 = mf * mf * eps * eps / (c * df * log_inv_delta);
            let b = cor1_batch(tau / (2.0 * (1.0 + omega)));
            (eta, 0.0, 0.0, 0.0, b, 0.0, t1.max(t2))
        }
    };

    let t_int = rounds.ceil().max(1.0) as u64;
    let sigma = match recipe {
        // σ² = c G² T ln(1/δ) / (m² ε²): the pair (2G, 0) has weight G²
        Recipe::Thm1CdpSgd => sigma_formula(budget, t_int, m, SensitivityPair { ga: 2.0 * g, gb: 0.0 }, c)?,
        _ => sigma_formula(budget, t_int, m, sensitivity_of(recipe.estimator(), g), c)?,
    };

    Ok(HyperParams { eta, gamma, beta, tau, alpha, batch, p, rounds, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(n: usize, omega: f64, m: usize) -> HyperInputs {
        HyperInputs {
            n,
            omega,
            m,
            d: 123,
            smoothness: 1.0,
            clip: 0.5,
            budget: PrivacyBudget::new(10.0, 1e-3).unwrap(),
            c: 1.0,
            phi0: 1.0,
        }
    }

    #[test]
    fn shift_stepsize_values() {
        assert!((shift_stepsize(0.0) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((shift_stepsize(19.0) - (39.0f64 / 16000.0).sqrt()).abs() < 1e-15);
        assert!((shift_stepsize(19.0) - 0.0493710).abs() < 1e-6);
    }

    #[test]
    fn cor1_values() {
        let h = derive_hyperparams(Recipe::Cor1Sgd, &inputs(10, 19.0, 3256)).unwrap();
        assert!((h.tau - 800f64.sqrt()).abs() < 1e-9);
        assert!((1.0 / h.eta - (1.0 + 2.0 * 800f64.sqrt())).abs() < 1e-9);
        assert!((1.0 / h.eta - 57.56854).abs() < 1e-5);
        assert!((h.beta - 800f64.sqrt() / 40.0).abs() < 1e-12);
        assert!(h.batch >= 1 && h.batch <= 3256);
        let gd = derive_hyperparams(Recipe::Cor1Gd, &inputs(10, 19.0, 3256)).unwrap();
        assert_eq!(gd.batch, 3256);
    }

    #[test]
    fn cor2_batch_for_perfect_cube() {
        let h = derive_hyperparams(Recipe::Cor2Svrg, &inputs(10, 0.0, 1000)).unwrap();
        assert_eq!(h.batch, 25);
        assert!((h.p - 0.025).abs() < 1e-15);
        // p^{2/3} b^{1/3} <= 1/4 is needed by the recipe
        assert!(h.p.powf(2.0 / 3.0) * (h.batch as f64).cbrt() <= 0.25 + 1e-12);
    }

    #[test]
    fn cor3_batch() {
        let h = derive_hyperparams(Recipe::Cor3Saga, &inputs(10, 0.0, 1000)).unwrap();
        assert_eq!(h.batch, 300);
    }

    #[test]
    fn rejects_nonpositive() {
        let mut i = inputs(10, 1.0, 100);
        i.smoothness = 0.0;
        assert!(derive_hyperparams(Recipe::Cor1Sgd, &i).is_err());
    }
}
