//! Reference mechanisms for utility comparison.
//!
//! * independent Gaussian input perturbation, `x + N(0, σ² I)`;
//! * the binary-tree output mechanism: every subtree sum gets its own
//!   independent Gaussian noise and a range is answered from its canonical
//!   dyadic cover.
//!
//! Both are calibrated with the same correlated-Gaussian bound as the tree
//! mechanism. One element touches `k + 1` subtree sums, so the binary-tree
//! release is the identity-covariance case on `k + 1` coordinates and uses
//! a precision diagonal of `k + 1`.

use crate::depth::TreeDepth;
use crate::error::{Error, Result};
use crate::mechanism::{
    range_decompose, CovarianceFamily, DataVector, MechanismTag, PrivatizedVector, RangeQuery,
    RangeRelease, ReleaseMeta,
};
use crate::privacy::{calibrate_general, calibrate_iid, CalibratedSigma, PrivacyBudget};
use crate::rng::{GaussianSource, SeededRng};

pub fn iid_perturb(
    x: &DataVector,
    budget: &PrivacyBudget,
    rng: &mut SeededRng,
) -> Result<PrivatizedVector> {
    iid_perturb_with(x, &calibrate_iid(budget)?, rng)
}

pub fn iid_perturb_with(
    x: &DataVector,
    sigma: &CalibratedSigma,
    rng: &mut SeededRng,
) -> Result<PrivatizedVector> {
    let s = sigma.sigma;
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidSigma(s));
    }
    let noise: Vec<f64> = (0..x.len())
        .map(|_| s * GaussianSource::<f64>::standard_normal(rng))
        .collect();
    Ok(PrivatizedVector::from_noise(
        x,
        &noise,
        ReleaseMeta {
            mechanism: MechanismTag::Iid,
            covariance: CovarianceFamily::Identity,
            sigma: s,
            depth: None,
            n: x.len(),
            seed: rng.seed(),
        },
    ))
}

/// σ for the binary-tree mechanism over `2^k` leaves.
pub fn calibrate_binary_tree(k: TreeDepth, budget: &PrivacyBudget) -> Result<CalibratedSigma> {
    calibrate_general(k.get() as f64 + 1.0, budget)
}

/// Independently noised subtree sums of a perfect binary tree (heap order).
///
/// Not internally consistent: a parent generally differs from the sum of
/// its children.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTreeRelease {
    depth: TreeDepth,
    noisy_nodes: Vec<f64>,
    sigma_bt: f64,
    seed: u64,
}

impl BinaryTreeRelease {
    pub fn depth(&self) -> TreeDepth {
        self.depth
    }

    pub fn noisy_nodes(&self) -> &[f64] {
        &self.noisy_nodes
    }

    pub fn sigma_bt(&self) -> f64 {
        self.sigma_bt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest `|parent - (left + right)|` among noisy nodes.
    pub fn max_consistency_gap(&self) -> f64 {
        (0..self.depth.internal_nodes())
            .map(|m| {
                (self.noisy_nodes[m] - self.noisy_nodes[2 * m + 1] - self.noisy_nodes[2 * m + 2])
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

impl RangeRelease for BinaryTreeRelease {
    fn len(&self) -> usize {
        self.depth.leaves()
    }

    fn answer_range(&self, q: RangeQuery) -> Result<f64> {
        Ok(range_decompose(self.depth, q)?
            .into_iter()
            .map(|m| self.noisy_nodes[m])
            .sum())
    }
}

pub fn bt_perturb(
    x: &DataVector,
    budget: &PrivacyBudget,
    rng: &mut SeededRng,
) -> Result<BinaryTreeRelease> {
    let k = TreeDepth::for_leaves(x.len())?;
    bt_perturb_with(x, &calibrate_binary_tree(k, budget)?, rng)
}

pub fn bt_perturb_with(
    x: &DataVector,
    sigma: &CalibratedSigma,
    rng: &mut SeededRng,
) -> Result<BinaryTreeRelease> {
    let k = TreeDepth::for_leaves(x.len())?;
    let s = sigma.sigma;
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidSigma(s));
    }
    let mut nodes = vec![0.0; k.nodes()];
    let internal = k.internal_nodes();
    nodes[internal..].copy_from_slice(x.values());
    for m in (0..internal).rev() {
        nodes[m] = nodes[2 * m + 1] + nodes[2 * m + 2];
    }
    for v in nodes.iter_mut() {
        *v += s * GaussianSource::<f64>::standard_normal(rng);
    }
    Ok(BinaryTreeRelease {
        depth: k,
        noisy_nodes: nodes,
        sigma_bt: s,
        seed: rng.seed(),
    })
}
