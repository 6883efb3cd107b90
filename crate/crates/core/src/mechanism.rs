//! Correlated input perturbation and query answering.
//!
//! The release is a single privatized vector `x + noise`; every query is a
//! linear read of it, so answers are internally consistent by construction
//! (a range answer equals the sum of the answers of any partition of it).

use serde::{Deserialize, Serialize};

use crate::depth::{heap, TreeDepth};
use crate::error::{Error, Result};
use crate::privacy::CalibratedSigma;
use crate::rng::SeededRng;
use crate::sampler::{cascade_sample_into, general_tree_sample, sample_2d, GeneralTree};

/// Confidential data vector (histogram counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataVector {
    values: Vec<f64>,
}

impl DataVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty data vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData(i));
        }
        Ok(Self { values })
    }

    /// Uniform integers in `1..=1000`.
    pub fn synthetic(n: usize, rng: &mut SeededRng) -> Result<Self> {
        Self::new((0..n).map(|_| rng.uniform_int(1, 1000) as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prefix_sums(&self) -> Vec<f64> {
        prefix_sums(&self.values)
    }
}

pub(crate) fn prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

/// Inclusive leaf range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RangeQuery {
    pub lo: usize,
    pub hi: usize,
}

impl RangeQuery {
    pub fn new(lo: usize, hi: usize, n: usize) -> Result<Self> {
        let q = Self { lo, hi };
        q.check(n)?;
        Ok(q)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.lo > self.hi || self.hi >= n {
            return Err(Error::RangeOutOfBounds {
                lo: self.lo,
                hi: self.hi,
                n,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All `n(n+1)/2` ranges over `n` elements.
    pub fn all(n: usize) -> impl Iterator<Item = RangeQuery> {
        (0..n).flat_map(move |lo| (lo..n).map(move |hi| RangeQuery { lo, hi }))
    }
}

/// Which noise law produced a release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismTag {
    Correlated,
    Iid,
    #[serde(rename = "btree")]
    BinaryTree,
}

impl MechanismTag {
    pub const ALL: [MechanismTag; 3] = [Self::Correlated, Self::Iid, Self::BinaryTree];

    pub fn name(self) -> &'static str {
        match self {
            Self::Correlated => "correlated",
            Self::Iid => "iid",
            Self::BinaryTree => "btree",
        }
    }
}

impl std::str::FromStr for MechanismTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlated" => Ok(Self::Correlated),
            "iid" => Ok(Self::Iid),
            "btree" | "binary_tree" => Ok(Self::BinaryTree),
            other => Err(Error::InvalidParameter(format!("unknown mechanism {other:?}"))),
        }
    }
}

/// Covariance family of the leaf noise, so consumers can write the exact likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceFamily {
    /// `σ² C_k` over the padded length `2^k`.
    Tree,
    /// `σ² I`.
    Identity,
    /// Leaf law induced by an explicit general binary tree.
    GeneralTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseMeta {
    pub mechanism: MechanismTag,
    pub covariance: CovarianceFamily,
    pub sigma: f64,
    /// Tree depth used for the noise (padded length is `2^depth`).
    pub depth: Option<u32>,
    pub n: usize,
    pub seed: u64,
}

/// `x + noise`, with prefix sums for constant-time range answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivatizedVector {
    values: Vec<f64>,
    prefix: Vec<f64>,
    meta: ReleaseMeta,
}

impl PrivatizedVector {
    pub(crate) fn from_noise(x: &DataVector, noise: &[f64], meta: ReleaseMeta) -> Self {
        let values: Vec<f64> = x.values.iter().zip(noise).map(|(a, b)| a + b).collect();
        let prefix = prefix_sums(&values);
        Self {
            values,
            prefix,
            meta,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }

    pub fn meta(&self) -> &ReleaseMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Anything that answers range and subset-sum queries over `n` elements.
pub trait RangeRelease {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn answer_range(&self, q: RangeQuery) -> Result<f64>;

    /// Sum over an arbitrary index set, answered as a union of maximal runs.
    fn answer_indices(&self, indices: &[usize]) -> Result<f64> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut total = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let lo = sorted[i];
            let mut hi = lo;
            while i + 1 < sorted.len() && sorted[i + 1] == hi + 1 {
                i += 1;
                hi += 1;
            }
            total += self.answer_range(RangeQuery { lo, hi })?;
            i += 1;
        }
        Ok(total)
    }
}

impl RangeRelease for PrivatizedVector {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn answer_range(&self, q: RangeQuery) -> Result<f64> {
        q.check(self.values.len())?;
        Ok(self.prefix[q.hi + 1] - self.prefix[q.lo])
    }
}

/// Free-function form of [`RangeRelease::answer_range`].
pub fn answer_range<R: RangeRelease + ?Sized>(release: &R, q: RangeQuery) -> Result<f64> {
    release.answer_range(q)
}

/// Adds cascade-sampled `N(0, σ² C_k)` noise.
///
/// Lengths that are not a power of two are padded with zero data up to
/// `2^k`; only the first `n` privatized entries are kept.
pub fn perturb(
    x: &DataVector,
    sigma: &CalibratedSigma,
    rng: &mut SeededRng,
) -> Result<PrivatizedVector> {
    let mut scratch = Vec::new();
    perturb_with_scratch(x, sigma, rng, &mut scratch)
}

pub(crate) fn perturb_with_scratch(
    x: &DataVector,
    sigma: &CalibratedSigma,
    rng: &mut SeededRng,
    scratch: &mut Vec<f64>,
) -> Result<PrivatizedVector> {
    let k = TreeDepth::covering(x.len())?;
    cascade_sample_into(k, sigma.sigma, rng, scratch)?;
    let leaves = &scratch[k.internal_nodes()..];
    Ok(PrivatizedVector::from_noise(
        x,
        leaves,
        ReleaseMeta {
            mechanism: MechanismTag::Correlated,
            covariance: CovarianceFamily::Tree,
            sigma: sigma.sigma,
            depth: Some(k.get()),
            n: x.len(),
            seed: rng.seed(),
        },
    ))
}

/// Adds noise generated over an explicit hierarchy whose leaf slots index `x`.
pub fn perturb_with_tree(
    x: &DataVector,
    tree: &GeneralTree,
    sigma: &CalibratedSigma,
    rng: &mut SeededRng,
) -> Result<PrivatizedVector> {
    if tree.leaf_count() != x.len() {
        return Err(Error::LengthMismatch {
            expected: tree.leaf_count(),
            got: x.len(),
        });
    }
    let node_noise = general_tree_sample(tree, sigma.sigma, rng)?;
    let noise: Vec<f64> = tree.leaf_nodes().iter().map(|&id| node_noise[id]).collect();
    Ok(PrivatizedVector::from_noise(
        x,
        &noise,
        ReleaseMeta {
            mechanism: MechanismTag::Correlated,
            covariance: CovarianceFamily::GeneralTree,
            sigma: sigma.sigma,
            depth: Some(tree.max_depth()),
            n: x.len(),
            seed: rng.seed(),
        },
    ))
}

/// Canonical cover of `[lo, hi]` by maximal dyadic blocks, as heap node indices
/// in left-to-right order. At most `2k - 2` nodes for `k ≥ 2`.
pub fn range_decompose(k: TreeDepth, q: RangeQuery) -> Result<Vec<usize>> {
    q.check(k.leaves())?;
    let mut out = Vec::new();
    let kk = k.get();
    fn walk(kk: u32, m: usize, q: RangeQuery, out: &mut Vec<usize>) {
        let (a, b) = heap::leaf_span(kk, m);
        if b < q.lo || a > q.hi {
            return;
        }
        if q.lo <= a && b <= q.hi {
            out.push(m);
            return;
        }
        walk(kk, heap::left(m), q, out);
        walk(kk, heap::right(m), q, out);
    }
    walk(kk, 0, q, &mut out);
    Ok(out)
}

/// Privatized `2^k1 × 2^k2` table with 2-D prefix sums.
///
/// No privacy calibration is claimed for this release; σ is supplied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl PrivatizedGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Sum over rows `r.lo..=r.hi` and columns `c.lo..=c.hi`.
    pub fn answer_rect(&self, r: RangeQuery, c: RangeQuery) -> Result<f64> {
        r.check(self.rows)?;
        c.check(self.cols)?;
        let w = self.cols + 1;
        let p = |i: usize, j: usize| self.prefix[i * w + j];
        Ok(p(r.hi + 1, c.hi + 1) - p(r.lo, c.hi + 1) - p(r.hi + 1, c.lo) + p(r.lo, c.lo))
    }
}

/// Adds two-dimensional cascade noise to a row-major table.
pub fn perturb_grid(
    x: &[f64],
    rows: usize,
    cols: usize,
    sigma: f64,
    rng: &mut SeededRng,
) -> Result<PrivatizedGrid> {
    let (k1, k2) = (TreeDepth::for_leaves(rows)?, TreeDepth::for_leaves(cols)?);
    if x.len() != rows * cols {
        return Err(Error::LengthMismatch {
            expected: rows * cols,
            got: x.len(),
        });
    }
    let noise = sample_2d(k1, k2, sigma, rng)?.leaf_table();
    let values: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let w = cols + 1;
    let mut prefix = vec![0.0; (rows + 1) * w];
    for i in 0..rows {
        let mut run = 0.0;
        for j in 0..cols {
            run += values[i * cols + j];
            prefix[(i + 1) * w + j + 1] = prefix[i * w + j + 1] + run;
        }
    }
    Ok(PrivatizedGrid {
        rows,
        cols,
        values,
        prefix,
    })
}
