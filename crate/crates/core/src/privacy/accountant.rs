//! Numeric moments accountant for Poisson-subsampled Gaussian rounds.
//!
//! Per round and per integer order `λ`, the log moment of the subsampled
//! Gaussian release is bounded by
//!
//! ```text
//! α(λ) ≤ 6 λ (λ + 1) (G_A²/4 + G_B²) / ((1 − q) m² σ²)
//! ```
//!
//! valid when `q < G_A / (16 b σ)` and `λ ≤ (2 b² σ² / (3 G_A²)) ln(G_A / (q b σ))`.
//! Moments add over `T` rounds and the tail bound gives
//! `δ = min_λ exp(T α(λ) − λ ε)`. The cubic remainder of the per-round
//! bound is dropped, which is accurate only for small `q`.

use std::fmt;

use crate::error::{Error, Result};

use super::{PrivacyBudget, SensitivityPair};

/// Lower end of the σ search range.
pub const SIGMA_MIN: f64 = 1e-4;
/// Upper end of the σ search range.
pub const SIGMA_MAX: f64 = 1e4;
/// Relative width at which bisection stops.
pub const REL_TOL: f64 = 1e-3;

/// Which accountant condition a candidate σ fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `q < G_A / (16 b σ)` does not hold.
    SamplingRate { limit: f64 },
    /// No integer order fits inside the validity window.
    MomentWindow { lambda_max: f64 },
    /// The best admissible order still gives `ln δ'` above `ln δ`.
    Delta { log_delta: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SamplingRate { limit } => {
                write!(f, "sampling rate condition q < G_A/(16 b sigma) violated (needs q < {limit:.4e})")
            }
            Violation::MomentWindow { lambda_max } => {
                write!(f, "moment order window is empty (lambda_max = {lambda_max:.3})")
            }
            Violation::Delta { log_delta } => {
                write!(f, "delta bound not met (best ln delta = {log_delta:.4})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentsAccountant {
    pub budget: PrivacyBudget,
    pub rounds: u64,
    pub q: f64,
    pub m: usize,
    pub b: f64,
    pub sens: SensitivityPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountantReport {
    pub sigma: f64,
    /// Moment order attaining the bound at `sigma`.
    pub lambda: u64,
    /// `ln` of the δ bound at `sigma`.
    pub log_delta: f64,
    /// Largest σ allowed by the sampling-rate condition.
    pub sigma_limit: f64,
}

impl MomentsAccountant {
    pub fn new(
        budget: PrivacyBudget,
        rounds: u64,
        q: f64,
        m: usize,
        b: f64,
        sens: SensitivityPair,
    ) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::param(format!("sampling rate must lie in (0, 1], got {q}")));
        }
        if rounds == 0 || m == 0 || !(b > 0.0) {
            return Err(Error::param("accountant needs T >= 1, m >= 1, b > 0"));
        }
        if !(sens.ga > 0.0) || sens.gb < 0.0 {
            return Err(Error::param("accountant needs G_A > 0 and G_B >= 0"));
        }
        Ok(Self { budget, rounds, q, m, b, sens })
    }

    /// `T · α(λ)/(λ(λ+1))` at noise `sigma`: the composed moment per unit `λ(λ+1)`.
    fn composed_coefficient(&self, sigma: f64) -> f64 {
        let m = self.m as f64;
        6.0 * self.sens.weight() * self.rounds as f64 / ((1.0 - self.q) * m * m * sigma * sigma)
    }

    /// Composed log moment `T α(λ)` at order `lambda`.
    pub fn composed_moment(&self, lambda: u64, sigma: f64) -> f64 {
        let l = lambda as f64;
        self.composed_coefficient(sigma) * l * (l + 1.0)
    }

    /// Right end of the admissible order window (real-valued).
    pub fn lambda_max(&self, sigma: f64) -> f64 {
        let ga = self.sens.ga;
        let b = self.b;
        (2.0 * b * b * sigma * sigma / (3.0 * ga * ga)) * (ga / (self.q * b * sigma)).ln()
    }

    /// Largest σ allowed by `q < G_A / (16 b σ)` (exclusive).
    pub fn sigma_limit(&self) -> f64 {
        self.sens.ga / (16.0 * self.b * self.q)
    }

    /// Evaluates every condition at `sigma`, returning the minimizing order
    /// and `ln δ'` when all hold.
    pub fn check(&self, sigma: f64) -> std::result::Result<(u64, f64), Violation> {
        if self.q >= 1.0 || !(self.q < self.sens.ga / (16.0 * self.b * sigma)) {
            return Err(Violation::SamplingRate { limit: self.sens.ga / (16.0 * self.b * sigma) });
        }
        let lmax = self.lambda_max(sigma);
        if !(lmax >= 1.0) {
            return Err(Violation::MomentWindow { lambda_max: lmax });
        }
        let lmax = lmax.floor().min(u64::MAX as f64 / 4.0) as u64;
        // T α(λ) − λε is a convex quadratic in λ; check the integers
        // around its stationary point, clamped to the window.
        let a = self.composed_coefficient(sigma);
        let eps = self.budget.epsilon;
        let stationary = (eps - a) / (2.0 * a);
        let mut best = (1u64, f64::INFINITY);
        let lo = stationary.floor().max(1.0).min(lmax as f64) as u64;
        for lambda in [lo, lo.saturating_add(1).min(lmax), 1, lmax] {
            let val = self.composed_moment(lambda, sigma) - lambda as f64 * eps;
            if val < best.1 {
                best = (lambda, val);
            }
        }
        if best.1 <= self.budget.delta.ln() {
            Ok(best)
        } else {
            Err(Violation::Delta { log_delta: best.1 })
        }
    }

    /// Smallest σ in `[SIGMA_MIN, SIGMA_MAX]` meeting every condition, to
    /// relative tolerance `REL_TOL`.
    ///
    /// On `(0, σ_limit)` both the moment bound and the order window improve
    /// as σ grows, so the feasible set is an interval whose left end is found
    /// by bisection in log space.
    pub fn calibrate(&self) -> Result<AccountantReport> {
        let limit = self.sigma_limit();
        let mut hi = SIGMA_MAX.min(limit * (1.0 - 1e-12));
        if hi < SIGMA_MIN {
            return Err(Error::Calibration(format!(
                "{} for every sigma >= {SIGMA_MIN:e}",
                Violation::SamplingRate { limit: self.sens.ga / (16.0 * self.b * SIGMA_MIN) }
            )));
        }
        if let Err(v) = self.check(hi) {
            return Err(Error::Calibration(format!("no sigma in [{SIGMA_MIN:e}, {hi:.4e}] works: {v}")));
        }
        let mut lo = SIGMA_MIN;
        if self.check(lo).is_err() {
            while hi / lo - 1.0 > REL_TOL {
                let mid = (lo * hi).sqrt();
                if self.check(mid).is_ok() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        } else {
            hi = lo;
        }
        let (lambda, log_delta) = self.check(hi).expect("upper bracket stays feasible");
        Ok(AccountantReport { sigma: hi, lambda, log_delta, sigma_limit: limit })
    }
}

/// Calibrates σ for `T` rounds of subsampled Gaussian releases with
/// sampling rate `q = b/m`.
pub fn sigma_accountant(
    budget: PrivacyBudget,
    rounds: u64,
    q: f64,
    m: usize,
    b: f64,
    sens: SensitivityPair,
) -> Result<AccountantReport> {
    MomentsAccountant::new(budget, rounds, q, m, b, sens)?.calibrate()
}
