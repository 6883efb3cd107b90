//! Correlated Gaussian input perturbation for private range queries.
//!
//! Noise with covariance `σ² C_k` is drawn top-down over a complete binary
//! tree ([`cascade_sample`]): each internal node splits its value between two
//! children using one fresh standard normal, so a full sample costs `2^k`
//! draws and `O(2^k)` arithmetic. Adding the leaves to a length-`2^k` vector
//! gives a release whose subtree sums have variance `σ²` at every level and
//! whose contiguous range sums stay within `O(log n) σ²`.
//!
//! The dense matrices in [`correlation`] are test oracles only; nothing on
//! the sampling path materializes them.
//!
//! ```
//! use cascade_core::{perturb, calibrate_tree, DataVector, PrivacyBudget, RangeQuery, RangeRelease, SeededRng};
//!
//! let budget = PrivacyBudget::new(0.5, 1e-6).unwrap();
//! let sigma = calibrate_tree(16, &budget).unwrap();
//! let mut rng = SeededRng::new(7);
//! let x = DataVector::new((1..=16).map(f64::from).collect()).unwrap();
//! let release = perturb(&x, &sigma, &mut rng).unwrap();
//! let total = release.answer_range(RangeQuery::new(0, 15, 16).unwrap()).unwrap();
//! assert!(total.is_finite());
//! ```

pub mod baselines;
pub mod correlation;
pub mod depth;
pub mod error;
pub mod mechanism;
pub mod metrics;
pub mod privacy;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod scaling;
pub mod stats;

pub use baselines::{
    bt_perturb, bt_perturb_with, calibrate_binary_tree, iid_perturb, iid_perturb_with,
    BinaryTreeRelease,
};
pub use correlation::{
    build_correlation, build_precision, max_range_variance, precision_diag_max, DenseMatrix,
    DenseOracle, RangeVariance, DEFAULT_DENSE_CAP,
};
pub use depth::{TreeDepth, MAX_DEPTH};
pub use error::{Error, Result};
pub use mechanism::{
    answer_range, perturb, perturb_grid, perturb_with_tree, range_decompose, CovarianceFamily,
    DataVector, MechanismTag, PrivatizedGrid, PrivatizedVector, RangeQuery, RangeRelease,
    ReleaseMeta,
};
pub use metrics::{
    exact_err_l2, exact_err_worst_expected, mc_errors, mc_errors_at, sample_uniform_range,
    variance_by_level, variance_by_level_at, DataModel, ErrorReport, LevelVariance, McConfig,
    NoiseSpec, Query, Workload, WorkloadKind,
};
pub use privacy::{
    calibrate_general, calibrate_iid, calibrate_tree, calibrate_tree_via_general,
    CalibratedSigma, CalibrationSource, PrivacyBudget,
};
pub use rng::{GaussianSource, SeededRng, RNG_ALGORITHM};
pub use sampler::{
    cascade_sample, cascade_sample_into, cascade_sample_metered, general_tree_sample, sample_2d,
    split_node, stream_next, Children, CholeskySampler, GeneralTree, NoiseGrid2D, NoiseTree,
    NoiseTreeRecord, SampleCost, StreamState,
};
pub use scalar::{Real, Scalar};
pub use scaling::{run_scaling, ScalingReport, ScalingRow};

/// Exact rational scalar for oracle computations.
pub type Rational = num_rational::Ratio<i64>;

pub type Matrix64 = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type ExactMatrix = DenseMatrix<Rational>;

pub type NoiseTree64 = NoiseTree<f64>;
pub type NoiseTree32 = NoiseTree<f32>;
pub type NoiseGrid64 = NoiseGrid2D<f64>;
pub type StreamState64 = StreamState<f64>;
