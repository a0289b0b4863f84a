//! Clipping, Gaussian perturbation and noise calibration.

mod accountant;

pub use accountant::{sigma_accountant, AccountantReport, MomentsAccountant, Violation};

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::streams::Stream;

/// Target `(ε, δ)` for local differential privacy of one client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Formula,
    Accountant,
    Off,
}

/// Per-coordinate Gaussian std and the per-sample clip threshold in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub clip: f64,
    pub mode: NoiseMode,
    pub c: f64,
}

impl NoiseSpec {
    pub fn off(clip: f64) -> Self {
        Self { sigma: 0.0, clip, mode: NoiseMode::Off, c: 1.0 }
    }

    pub fn fixed(sigma: f64, clip: f64) -> Self {
        Self { sigma, clip, mode: NoiseMode::Formula, c: 1.0 }
    }
}

/// Norm bounds `(G_A, G_B)` on the minibatch part and the full-average part
/// of a gradient estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPair {
    pub ga: f64,
    pub gb: f64,
}

impl SensitivityPair {
    /// `G_A²/4 + G_B²`, the quantity every calibration rule scales with.
    pub fn weight(&self) -> f64 {
        self.ga * self.ga / 4.0 + self.gb * self.gb
    }
}

/// `min(1, G/‖g‖) · g`. An infinite threshold disables clipping.
pub fn clip_gradient(g: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = g.to_vec();
    clip_in_place(&mut out, threshold);
    out
}

pub fn clip_in_place(g: &mut [f64], threshold: f64) {
    debug_assert!(threshold > 0.0);
    if threshold.is_infinite() {
        return;
    }
    let n = norm(g);
    if n > threshold {
        let scale = threshold / n;
        g.iter_mut().for_each(|v| *v *= scale);
    }
}

/// `g + ξ` with `ξ ~ N(0, σ² I)`.
pub fn perturb(g: &[f64], sigma: f64, stream: &mut Stream) -> Vec<f64> {
    let mut out = g.to_vec();
    perturb_in_place(&mut out, sigma, stream);
    out
}

pub fn perturb_in_place(g: &mut [f64], sigma: f64, stream: &mut Stream) {
    if sigma == 0.0 {
        return;
    }
    for v in g.iter_mut() {
        let z: f64 = StandardNormal.sample(stream);
        *v += sigma * z;
    }
}

/// Closed-form calibration `σ² = c (G_A²/4 + G_B²) T ln(1/δ) / (m² ε²)`.
///
/// With the pair `(G, 0)` and `4c` in place of `c` this is also the
/// direct-compression rule `σ² = c G² T ln(1/δ) / (m² ε²)`.
pub fn sigma_formula(
    budget: PrivacyBudget,
    rounds: u64,
    m: usize,
    sens: SensitivityPair,
    c: f64,
) -> Result<f64> {
    if rounds == 0 || m == 0 {
        return Err(Error::param("sigma_formula needs T >= 1 and m >= 1"));
    }
    if !(c > 0.0) {
        return Err(Error::param(format!("formula constant must be positive, got {c}")));
    }
    if sens.ga < 0.0 || sens.gb < 0.0 {
        return Err(Error::param("sensitivities must be nonnegative"));
    }
    let m = m as f64;
    let var = c * sens.weight() * rounds as f64 * (1.0 / budget.delta).ln()
        / (m * m * budget.epsilon * budget.epsilon);
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{derive_stream, Purpose};

    #[test]
    fn clip_examples() {
        assert_eq!(clip_gradient(&[3.0, 4.0], 10.0), vec![3.0, 4.0]);
        let c = clip_gradient(&[3.0, 4.0], 1.0);
        assert!((c[0] - 0.6).abs() < 1e-15 && (c[1] - 0.8).abs() < 1e-15);
        assert_eq!(clip_gradient(&[0.0, 0.0], 0.5), vec![0.0, 0.0]);
        assert_eq!(clip_gradient(&[1e9, -3.0], f64::INFINITY), vec![1e9, -3.0]);
    }

    #[test]
    fn perturb_zero_sigma_is_identity() {
        let mut s = derive_stream(1, 0, 0, Purpose::Noise);
        assert_eq!(perturb(&[1.0, 2.0], 0.0, &mut s), vec![1.0, 2.0]);
    }

    #[test]
    fn perturb_mean_and_second_moment() {
        let d = 10_000;
        let g = vec![0.5; d];
        let mut mean = 0.0;
        let draws = 100;
        for r in 0..draws {
            let mut s = derive_stream(3, 0, r, Purpose::Noise);
            let out = perturb(&g, 1.0, &mut s);
            mean += out.iter().zip(&g).map(|(o, g)| o - g).sum::<f64>();
        }
        mean /= (d * draws as usize) as f64;
        assert!(mean.abs() < 5.0 / 1e3, "mean = {mean}");

        let mut sq = 0.0;
        let total = 100_000;
        let mut s = derive_stream(4, 0, 0, Purpose::Noise);
        let out = perturb(&vec![0.0; total], 2.0, &mut s);
        for v in out {
            sq += v * v;
        }
        let per = sq / total as f64;
        assert!((per - 4.0).abs() / 4.0 < 0.02, "E xi^2 = {per}");
    }

    #[test]
    fn perturb_coordinates_uncorrelated() {
        let mut s = derive_stream(8, 2, 0, Purpose::Noise);
        let n = 10_000;
        let out = perturb(&vec![0.0; 2 * n], 1.0, &mut s);
        let (a, b) = out.split_at(n);
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let corr = dot / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|y| y * y).sum::<f64>()).sqrt();
        assert!(corr.abs() < 0.02, "corr = {corr}");
    }

    #[test]
    fn formula_hand_arithmetic() {
        let b = PrivacyBudget::new(5.0, 1e-3).unwrap();
        let s = SensitivityPair { ga: 1.0, gb: 0.5 };
        let sigma = sigma_formula(b, 1000, 1000, s, 1.0).unwrap();
        // 0.5 * 1000 * ln(1000) / (1e6 * 25)
        let expected_var = 0.5 * 1000.0 * 1000f64.ln() / 25e6;
        assert!((sigma * sigma - expected_var).abs() < 1e-15);
        assert!((sigma - 0.011754).abs() < 1e-6, "{sigma}");
    }

    #[test]
    fn formula_scaling_laws() {
        let s = SensitivityPair { ga: 1.0, gb: 0.5 };
        let base = sigma_formula(PrivacyBudget::new(2.0, 1e-5).unwrap(), 400, 500, s, 1.0).unwrap();
        let eps2 = sigma_formula(PrivacyBudget::new(4.0, 1e-5).unwrap(), 400, 500, s, 1.0).unwrap();
        let t4 = sigma_formula(PrivacyBudget::new(2.0, 1e-5).unwrap(), 1600, 500, s, 1.0).unwrap();
        let m2 = sigma_formula(PrivacyBudget::new(2.0, 1e-5).unwrap(), 400, 1000, s, 1.0).unwrap();
        assert!((base / eps2 - 2.0).abs() < 1e-12);
        assert!((t4 / base - 2.0).abs() < 1e-12);
        assert!((base / m2 - 2.0).abs() < 1e-12);
        let zero = sigma_formula(PrivacyBudget::new(2.0, 1e-5).unwrap(), 400, 500, SensitivityPair { ga: 0.0, gb: 0.0 }, 1.0).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn formula_rejects_bad_inputs() {
        let b = PrivacyBudget::new(1.0, 0.1).unwrap();
        let s = SensitivityPair { ga: 1.0, gb: 0.0 };
        assert!(sigma_formula(b, 0, 10, s, 1.0).is_err());
        assert!(sigma_formula(b, 10, 0, s, 1.0).is_err());
        assert!(sigma_formula(b, 10, 10, s, 0.0).is_err());
        assert!(PrivacyBudget::new(0.0, 0.1).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
    }
}
