//! Noise-scale calibration for (ε, δ)-differential privacy.
//!
//! Gaussian input noise `N(0, σ² C)` is (ε, δ)-DP on neighbouring vectors
//! with `‖x - x'‖₁ ≤ 1` whenever
//!
//! ```text
//! σ² ≥ 2 · max diag(C⁻¹) · ln(2/δ) / ε²
//! ```
//!
//! for ε ∈ (0, 1] and δ ∈ (0, 1/2]. Budgets outside that range are rejected.
//! For the tree covariance `C_k` the precision diagonal is `1 + k/3`.
//! The logarithm is natural throughout, and the minimal admissible σ² is
//! returned.

use serde::{Deserialize, Serialize};

use crate::correlation::precision_diag_max;
use crate::depth::TreeDepth;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidBudget(format!("epsilon {epsilon} not in (0, 1]")));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidBudget(format!("delta {delta} not in (0, 1/2]")));
        }
        Ok(Self { epsilon, delta })
    }

    /// Skips range validation so unit checks can use `δ = 2/e` (`ln(2/δ) = 1`).
    #[cfg(test)]
    pub(crate) fn unchecked(epsilon: f64, delta: f64) -> Self {
        Self { epsilon, delta }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn log_term(&self) -> f64 {
        (2.0 / self.delta).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    General,
    Tree,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedSigma {
    pub sigma: f64,
    pub sigma_squared: f64,
    pub source: CalibrationSource,
}

impl CalibratedSigma {
    fn from_variance(sigma_squared: f64, source: CalibrationSource) -> Self {
        Self {
            sigma: sigma_squared.sqrt(),
            sigma_squared,
            source,
        }
    }

    /// Caller-chosen σ, e.g. for streaming or 2-D releases without a calibration.
    pub fn manual(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self {
            sigma,
            sigma_squared: sigma * sigma,
            source: CalibrationSource::General,
        })
    }
}

/// Minimal σ² for correlated noise whose precision matrix has largest diagonal `diag_max`.
pub fn calibrate_general(diag_max: f64, budget: &PrivacyBudget) -> Result<CalibratedSigma> {
    if !(diag_max.is_finite() && diag_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "precision diagonal must be positive, got {diag_max}"
        )));
    }
    let var = 2.0 * diag_max * budget.log_term() / (budget.epsilon * budget.epsilon);
    Ok(CalibratedSigma::from_variance(var, CalibrationSource::General))
}

/// Minimal σ² for the tree covariance over `n = 2^k` leaves:
/// `(2/ε² + 2 log₂(n) / (3ε²)) · ln(2/δ)`.
pub fn calibrate_tree(n: usize, budget: &PrivacyBudget) -> Result<CalibratedSigma> {
    let k = TreeDepth::for_leaves(n)?;
    if k.get() == 0 {
        return Err(Error::NotPowerOfTwo(n));
    }
    let eps2 = budget.epsilon * budget.epsilon;
    let log2n = k.get() as f64;
    let var = (2.0 / eps2 + 2.0 * log2n / (3.0 * eps2)) * budget.log_term();
    Ok(CalibratedSigma::from_variance(var, CalibrationSource::Tree))
}

/// Tree calibration expressed through the general bound with diagonal `1 + k/3`.
pub fn calibrate_tree_via_general(k: TreeDepth, budget: &PrivacyBudget) -> Result<CalibratedSigma> {
    calibrate_general(precision_diag_max::<f64>(k), budget)
}

/// Minimal σ² for independent noise (`C = I`).
pub fn calibrate_iid(budget: &PrivacyBudget) -> Result<CalibratedSigma> {
    let mut s = calibrate_general(1.0, budget)?;
    s.source = CalibrationSource::Iid;
    Ok(s)
}
