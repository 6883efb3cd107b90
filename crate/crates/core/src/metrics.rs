//! Error metrics for privatized workloads.
//!
//! For a workload `W` with `m` rows and release noise `s`:
//!
//! * `err_l2` — expected total squared error `E‖W s‖₂²`;
//! * `err_worst_expected` — worst-case expected error `‖E|W s|‖_∞`;
//! * `err_expected_worst` — expected worst-case error `E‖W s‖_∞`.
//!
//! Exact values come from the dense covariance at small depth. Monte Carlo
//! estimates perturb synthetic data, answer a fixed query set drawn once per
//! run, and report standard errors over replicates. When ranges are sampled
//! rather than enumerated, the `err_l2` estimate is scaled up to the full
//! workload size and `err_expected_worst` is biased low (the max runs over
//! the sampled queries only); `exhaustive` removes that at depth ≤ 6.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{bt_perturb_with, calibrate_binary_tree, iid_perturb_with, BinaryTreeRelease};
use crate::correlation::{DenseMatrix, DenseOracle, RangeVariance};
use crate::depth::{heap, TreeDepth};
use crate::error::{Error, Result};
use crate::mechanism::{
    perturb_with_scratch, prefix_sums, DataVector, MechanismTag, PrivatizedVector, RangeQuery,
    RangeRelease,
};
use crate::privacy::{calibrate_iid, calibrate_tree_via_general, CalibratedSigma, PrivacyBudget};
use crate::rng::SeededRng;
use crate::stats::Moments;

/// Depth limit for enumerating every contiguous range in Monte Carlo runs.
pub const EXHAUSTIVE_MAX_DEPTH: u32 = 6;
pub const DEFAULT_QUERIES_PER_REPLICATE: usize = 5000;
pub const DEFAULT_RANDOM_QUERIES: usize = 2500;

/// One workload row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Range(RangeQuery),
    Set(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    /// All `n(n+1)/2` contiguous ranges.
    ContinuousAll,
    /// All `2n - 1` subtree sums.
    Nodal,
    /// `count` dense random subsets: each row picks a size uniformly in
    /// `{n/4, ..., n}` and then that many distinct indices.
    Random { count: usize, seed: u64 },
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub n: usize,
    pub kind: WorkloadKind,
}

impl Workload {
    pub fn continuous(n: usize) -> Self {
        Self {
            n,
            kind: WorkloadKind::ContinuousAll,
        }
    }

    pub fn nodal(n: usize) -> Self {
        Self {
            n,
            kind: WorkloadKind::Nodal,
        }
    }

    pub fn random(n: usize, count: usize, seed: u64) -> Self {
        Self {
            n,
            kind: WorkloadKind::Random { count, seed },
        }
    }

    pub fn explicit(n: usize, rows: Vec<Vec<usize>>) -> Self {
        Self {
            n,
            kind: WorkloadKind::Explicit(rows),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            WorkloadKind::ContinuousAll => "continuous",
            WorkloadKind::Nodal => "nodal",
            WorkloadKind::Random { .. } => "random",
            WorkloadKind::Explicit(_) => "explicit",
        }
    }

    /// Number of rows `m`.
    pub fn total_queries(&self) -> usize {
        match &self.kind {
            WorkloadKind::ContinuousAll => self.n * (self.n + 1) / 2,
            WorkloadKind::Nodal => 2 * self.n - 1,
            WorkloadKind::Random { count, .. } => *count,
            WorkloadKind::Explicit(rows) => rows.len(),
        }
    }

    /// Every row, in a fixed order.
    pub fn rows(&self) -> Result<Vec<Query>> {
        let n = self.n;
        match &self.kind {
            WorkloadKind::ContinuousAll => Ok(RangeQuery::all(n).map(Query::Range).collect()),
            WorkloadKind::Nodal => {
                let k = TreeDepth::for_leaves(n)?;
                Ok((0..k.nodes())
                    .map(|m| {
                        let (lo, hi) = heap::leaf_span(k.get(), m);
                        Query::Range(RangeQuery { lo, hi })
                    })
                    .collect())
            }
            WorkloadKind::Random { count, seed } => {
                let mut rng = SeededRng::new(*seed);
                let min = (n / 4).max(1);
                Ok((0..*count)
                    .map(|_| {
                        let size = rng.uniform_int(min as i64, n as i64) as usize;
                        let mut idx =
                            rand::seq::index::sample(rng.inner_mut(), n, size).into_vec();
                        idx.sort_unstable();
                        Query::Set(idx)
                    })
                    .collect())
            }
            WorkloadKind::Explicit(rows) => {
                for row in rows {
                    if let Some(&bad) = row.iter().find(|&&i| i >= n) {
                        return Err(Error::RangeOutOfBounds { lo: bad, hi: bad, n });
                    }
                }
                Ok(rows.iter().cloned().map(Query::Set).collect())
            }
        }
    }
}

/// Uniform draw over all `n(n+1)/2` contiguous ranges.
///
/// With probability `2/(n+1)` a uniform singleton; otherwise the span
/// between two distinct uniform indices.
pub fn sample_uniform_range(n: usize, rng: &mut SeededRng) -> RangeQuery {
    assert!(n >= 1);
    if n == 1 || rng.bernoulli(2.0 / (n as f64 + 1.0)) {
        let i = rng.index(n);
        return RangeQuery { lo: i, hi: i };
    }
    let a = rng.index(n);
    let mut b = rng.index(n - 1);
    if b >= a {
        b += 1;
    }
    RangeQuery {
        lo: a.min(b),
        hi: a.max(b),
    }
}

struct ExactRows {
    cov: DenseMatrix<f64>,
    ranges: RangeVariance<f64>,
}

impl ExactRows {
    fn new(k: TreeDepth) -> Result<Self> {
        let cov = DenseOracle::default().correlation::<f64>(k)?;
        let ranges = RangeVariance::new(&cov);
        Ok(Self { cov, ranges })
    }

    fn variance(&self, q: &Query) -> f64 {
        match q {
            Query::Range(r) => self.ranges.variance(r.lo, r.hi),
            Query::Set(idx) => self.cov.subset_sum(idx),
        }
    }
}

fn exact_row_variances(workload: &Workload, k: TreeDepth) -> Result<Vec<f64>> {
    if workload.n != k.leaves() {
        return Err(Error::LengthMismatch {
            expected: k.leaves(),
            got: workload.n,
        });
    }
    let exact = ExactRows::new(k)?;
    let rows = workload.rows()?;
    Ok(rows.iter().map(|q| exact.variance(q)).collect())
}

/// `σ² Σ_rows w C_k wᵀ` for the correlated mechanism.
pub fn exact_err_l2(workload: &Workload, k: TreeDepth, sigma: f64) -> Result<f64> {
    let vars = exact_row_variances(workload, k)?;
    Ok(sigma * sigma * vars.iter().sum::<f64>())
}

/// `√(2/π) σ max_rows √(w C_k wᵀ)` for the correlated mechanism.
pub fn exact_err_worst_expected(workload: &Workload, k: TreeDepth, sigma: f64) -> Result<f64> {
    let vars = exact_row_variances(workload, k)?;
    let max = vars.into_iter().fold(0.0f64, f64::max);
    Ok((2.0 / PI).sqrt() * sigma * max.sqrt())
}

/// Mechanism plus the σ it runs at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mechanism: MechanismTag,
    pub sigma: CalibratedSigma,
}

impl NoiseSpec {
    /// σ from the shared correlated-Gaussian bound for a length-`n` release.
    pub fn calibrated(mechanism: MechanismTag, n: usize, budget: &PrivacyBudget) -> Result<Self> {
        let k = TreeDepth::covering(n)?;
        let sigma = match mechanism {
            MechanismTag::Correlated => {
                let mut s = calibrate_tree_via_general(k, budget)?;
                s.source = crate::privacy::CalibrationSource::Tree;
                s
            }
            MechanismTag::Iid => calibrate_iid(budget)?,
            MechanismTag::BinaryTree => calibrate_binary_tree(TreeDepth::for_leaves(n)?, budget)?,
        };
        Ok(Self { mechanism, sigma })
    }
}

/// Synthetic data used by the Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataModel {
    /// Uniform integers in `1..=1000`.
    #[default]
    Uniform,
    Zeros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: usize,
    pub queries: usize,
    pub exhaustive: bool,
    pub data: DataModel,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            queries: DEFAULT_QUERIES_PER_REPLICATE,
            exhaustive: false,
            data: DataModel::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStdErr {
    pub err_l2: f64,
    pub err_worst_expected: f64,
    pub err_expected_worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mechanism: MechanismTag,
    pub workload: String,
    pub n: usize,
    pub sigma: f64,
    pub err_l2: f64,
    pub err_worst_expected: f64,
    pub err_expected_worst: f64,
    pub std_err: McStdErr,
    pub replicates: usize,
    pub queries_sampled: usize,
    pub total_queries: usize,
}

impl ErrorReport {
    /// `√(err_l2 / m)`.
    pub fn rms_error(&self) -> f64 {
        (self.err_l2 / self.total_queries as f64).sqrt()
    }

    /// Standard deviation over replicates implied by a standard error.
    pub fn sd_of(&self, std_err: f64) -> f64 {
        std_err * (self.replicates as f64).sqrt()
    }
}

enum Release {
    Vector(PrivatizedVector),
    Tree(BinaryTreeRelease),
}

impl Release {
    fn make(spec: &NoiseSpec, x: &DataVector, rng: &mut SeededRng, scratch: &mut Vec<f64>) -> Result<Self> {
        Ok(match spec.mechanism {
            MechanismTag::Correlated => Release::Vector(perturb_with_scratch(x, &spec.sigma, rng, scratch)?),
            MechanismTag::Iid => Release::Vector(iid_perturb_with(x, &spec.sigma, rng)?),
            MechanismTag::BinaryTree => Release::Tree(bt_perturb_with(x, &spec.sigma, rng)?),
        })
    }

    fn answer(&self, q: &Query) -> Result<f64> {
        let r: &dyn RangeRelease = match self {
            Release::Vector(v) => v,
            Release::Tree(t) => t,
        };
        match q {
            Query::Range(range) => r.answer_range(*range),
            Query::Set(idx) => r.answer_indices(idx),
        }
    }
}

fn truth(prefix: &[f64], x: &DataVector, q: &Query) -> f64 {
    match q {
        Query::Range(r) => prefix[r.hi + 1] - prefix[r.lo],
        Query::Set(idx) => idx.iter().map(|&i| x.values()[i]).sum(),
    }
}

fn make_data(model: DataModel, n: usize, rng: &mut SeededRng) -> Result<DataVector> {
    match model {
        DataModel::Uniform => DataVector::synthetic(n, rng),
        DataModel::Zeros => DataVector::new(vec![0.0; n]),
    }
}

/// Signed errors of every query in one replicate.
fn replicate_errors(
    spec: &NoiseSpec,
    workload: &Workload,
    queries: &[Query],
    data: DataModel,
    seed: u64,
    r: usize,
) -> Result<Vec<f64>> {
    let mut data_rng = SeededRng::derive(seed, 1 + 2 * r as u64);
    let mut noise_rng = SeededRng::derive(seed, 2 + 2 * r as u64);
    let x = make_data(data, workload.n, &mut data_rng)?;
    let prefix = prefix_sums(x.values());
    let mut scratch = Vec::new();
    let release = Release::make(spec, &x, &mut noise_rng, &mut scratch)?;
    queries
        .iter()
        .map(|q| Ok(release.answer(q)? - truth(&prefix, &x, q)))
        .collect()
}

const CHUNK: usize = 32;

/// Runs `replicates` in parallel chunks and feeds each error vector, in
/// replicate order, to `sink`.
fn for_each_replicate(
    replicates: usize,
    run: impl Fn(usize) -> Result<Vec<f64>> + Sync,
    mut sink: impl FnMut(&[f64]),
) -> Result<()> {
    let mut start = 0;
    while start < replicates {
        let end = (start + CHUNK).min(replicates);
        let batch: Vec<Result<Vec<f64>>> = (start..end).into_par_iter().map(&run).collect();
        for errs in batch {
            sink(&errs?);
        }
        start = end;
    }
    Ok(())
}

/// Monte Carlo estimate of the three error metrics at a calibrated σ.
pub fn mc_errors(
    mechanism: MechanismTag,
    workload: &Workload,
    budget: &PrivacyBudget,
    config: &McConfig,
    seed: u64,
) -> Result<ErrorReport> {
    let spec = NoiseSpec::calibrated(mechanism, workload.n, budget)?;
    mc_errors_at(&spec, workload, config, seed)
}

/// Monte Carlo estimate of the three error metrics at an explicit σ.
pub fn mc_errors_at(
    spec: &NoiseSpec,
    workload: &Workload,
    config: &McConfig,
    seed: u64,
) -> Result<ErrorReport> {
    if config.replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    let n = workload.n;
    let total = workload.total_queries();
    let queries: Vec<Query> = match workload.kind {
        WorkloadKind::ContinuousAll if config.exhaustive => {
            let k = TreeDepth::covering(n)?;
            if k.get() > EXHAUSTIVE_MAX_DEPTH {
                return Err(Error::WorkloadTooLarge(total));
            }
            workload.rows()?
        }
        WorkloadKind::ContinuousAll => {
            if config.queries == 0 {
                return Err(Error::InvalidParameter("need at least 1 query".into()));
            }
            let mut qrng = SeededRng::derive(seed, 0);
            (0..config.queries)
                .map(|_| Query::Range(sample_uniform_range(n, &mut qrng)))
                .collect()
        }
        _ => workload.rows()?,
    };
    if queries.is_empty() {
        return Err(Error::InvalidParameter("workload has no rows".into()));
    }

    let q = queries.len();
    let scale = total as f64 / q as f64;
    let mut abs_sum = vec![0.0; q];
    let mut sq_sum = vec![0.0; q];
    let mut l2 = Moments::default();
    let mut worst = Moments::default();
    for_each_replicate(
        config.replicates,
        |r| replicate_errors(spec, workload, &queries, config.data, seed, r),
        |errs| {
            let mut sq = 0.0;
            let mut max = 0.0f64;
            for (i, &e) in errs.iter().enumerate() {
                abs_sum[i] += e.abs();
                sq_sum[i] += e * e;
                sq += e * e;
                max = max.max(e.abs());
            }
            l2.push(scale * sq);
            worst.push(max);
        },
    )?;

    let reps = config.replicates as f64;
    let (arg, mean_abs) = abs_sum
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s / reps))
        .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
    let var_abs = ((sq_sum[arg] / reps - mean_abs * mean_abs) * reps / (reps - 1.0)).max(0.0);

    Ok(ErrorReport {
        mechanism: spec.mechanism,
        workload: workload.name().to_string(),
        n,
        sigma: spec.sigma.sigma,
        err_l2: l2.mean(),
        err_worst_expected: mean_abs,
        err_expected_worst: worst.mean(),
        std_err: McStdErr {
            err_l2: l2.std_err(),
            err_worst_expected: (var_abs / reps).sqrt(),
            err_expected_worst: worst.std_err(),
        },
        replicates: config.replicates,
        queries_sampled: q,
        total_queries: total,
    })
}

/// Empirical noise variance of subtree-sum answers at one tree level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelVariance {
    /// Distance from the root (0 = full range).
    pub level: u32,
    pub mean_variance: f64,
    pub std_err: f64,
    /// Standard deviation of the per-replicate level statistic.
    pub sd: f64,
}

/// Per-level variance profile of dyadic-range answers.
///
/// Each replicate contributes, per level, the mean squared answer error
/// over that level's nodes; the profile is the mean over replicates with its
/// standard error.
pub fn variance_by_level(
    mechanism: MechanismTag,
    k: TreeDepth,
    budget: &PrivacyBudget,
    replicates: usize,
    seed: u64,
) -> Result<Vec<LevelVariance>> {
    let spec = NoiseSpec::calibrated(mechanism, k.leaves(), budget)?;
    variance_by_level_at(&spec, k, replicates, seed)
}

pub fn variance_by_level_at(
    spec: &NoiseSpec,
    k: TreeDepth,
    replicates: usize,
    seed: u64,
) -> Result<Vec<LevelVariance>> {
    if replicates < 100 {
        return Err(Error::InvalidParameter("need at least 100 replicates".into()));
    }
    let workload = Workload::nodal(k.leaves());
    let queries = workload.rows()?;
    let levels = k.get() as usize + 1;
    let mut stats = vec![Moments::default(); levels];
    for_each_replicate(
        replicates,
        |r| replicate_errors(spec, &workload, &queries, DataModel::Uniform, seed, r),
        |errs| {
            for (level, st) in stats.iter_mut().enumerate() {
                let start = (1usize << level) - 1;
                let width = 1usize << level;
                let ms = errs[start..start + width].iter().map(|e| e * e).sum::<f64>() / width as f64;
                st.push(ms);
            }
        },
    )?;
    Ok(stats
        .iter()
        .enumerate()
        .map(|(level, st)| LevelVariance {
            level: level as u32,
            mean_variance: st.mean(),
            std_err: st.std_err(),
            sd: st.sd(),
        })
        .collect())
}
