//! Dense construction of the correlation family `C_k` and its inverse.
//!
//! `C_1 = [[1, -1/2], [-1/2, 1]]` and `C_{i+1}` places two copies of `C_i` on
//! the diagonal with every cross entry equal to `-1/2^(2i+1)`. Leaf `i`
//! corresponds to the `k`-bit binary expansion of `i`, most significant bit
//! first, so the block recursion is literal in index space.
//!
//! These matrices are `O(4^k)` in memory and serve as ground truth for the
//! linear-time samplers and for exact error formulas at small depth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::TreeDepth;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub const DEFAULT_DENSE_CAP: u32 = 12;

/// Square row-major matrix whose dimension is a power of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn from_entries(dim: usize, entries: Vec<T>) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = T::one();
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.entries[r * self.dim + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.entries[r * self.dim..(r + 1) * self.dim]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.dim)
            .map(|r| self.row(r).iter().cloned().fold(T::zero(), |a, b| a + b))
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        self.map(|v| v.as_f64())
    }

    /// Matrix product, rows computed in parallel.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let n = self.dim;
        let entries: Vec<T> = (0..n)
            .into_par_iter()
            .flat_map_iter(|r| {
                let mut out = vec![T::zero(); n];
                for (k, a) in self.row(r).iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (o, b) in out.iter_mut().zip(other.row(k)) {
                        *o = o.clone() + a.clone() * b.clone();
                    }
                }
                out
            })
            .collect();
        Ok(Self { dim: n, entries })
    }

    /// Largest absolute entrywise difference, in `f64`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r + 1..self.dim {
                worst = worst.max((self.get(r, c).as_f64() - self.get(c, r).as_f64()).abs());
            }
        }
        worst
    }

    /// `1ᵀ M[S, S] 1` for an arbitrary index set `S`.
    pub fn subset_sum(&self, indices: &[usize]) -> T {
        let mut acc = T::zero();
        for &r in indices {
            let row = self.row(r);
            for &c in indices {
                acc = acc + row[c].clone();
            }
        }
        acc
    }
}

impl<T: Real> DenseMatrix<T> {
    /// Lower Cholesky factor `L` with `L Lᵀ = self`.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.dim;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = *self.get(j, j);
            for p in 0..j {
                d = d - l[j * n + p] * l[j * n + p];
            }
            if !(d > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "matrix not positive definite at pivot {j}"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = *self.get(i, j);
                for p in 0..j {
                    s = s - l[i * n + p] * l[j * n + p];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { dim: n, entries: l })
    }
}

/// Dense builders bounded by a depth cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseOracle {
    pub cap: u32,
}

impl Default for DenseOracle {
    fn default() -> Self {
        Self {
            cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl DenseOracle {
    pub fn with_cap(cap: u32) -> Self {
        Self { cap }
    }

    pub fn check(&self, k: TreeDepth) -> Result<()> {
        if k.get() < 1 || k.get() > self.cap {
            return Err(Error::DepthOutOfRange {
                depth: k.get(),
                min: 1,
                max: self.cap,
            });
        }
        Ok(())
    }

    pub fn correlation<T: Scalar>(&self, k: TreeDepth) -> Result<DenseMatrix<T>> {
        self.check(k)?;
        let half = T::inv_pow2(1);
        let mut m = DenseMatrix {
            dim: 2,
            entries: vec![T::one(), -half.clone(), -half, T::one()],
        };
        for i in 1..k.get() {
            let cross = -T::inv_pow2(2 * i + 1);
            m = double_blocks(&m, |_, _| cross.clone());
        }
        Ok(m)
    }

    pub fn precision<T: Scalar>(&self, k: TreeDepth) -> Result<DenseMatrix<T>> {
        self.check(k)?;
        let three = T::one() + T::one() + T::one();
        let third = T::one() / three;
        let two_thirds = third.clone() + third.clone();
        let four_thirds = two_thirds.clone() + two_thirds.clone();
        let mut m = DenseMatrix {
            dim: 2,
            entries: vec![
                four_thirds.clone(),
                two_thirds.clone(),
                two_thirds.clone(),
                four_thirds,
            ],
        };
        for _ in 1..k.get() {
            let d = m.dim;
            let mut next = double_blocks(&m, |_, _| two_thirds.clone());
            let n2 = 2 * d;
            for r in 0..n2 {
                for c in 0..n2 {
                    if r / d == c / d {
                        let e = &mut next.entries[r * n2 + c];
                        *e = e.clone() + third.clone();
                    }
                }
            }
            m = next;
        }
        Ok(m)
    }

    pub fn range_variance<T: Scalar>(&self, k: TreeDepth) -> Result<RangeVariance<T>> {
        Ok(RangeVariance::new(&self.correlation(k)?))
    }
}

/// `[[m, x], [x, m]]` with the off-diagonal blocks filled by `cross(r, c)`.
/// Only the upper triangle is evaluated; the lower triangle is mirrored.
fn double_blocks<T: Scalar>(
    m: &DenseMatrix<T>,
    cross: impl Fn(usize, usize) -> T,
) -> DenseMatrix<T> {
    let d = m.dim;
    let n = 2 * d;
    let mut entries = vec![T::zero(); n * n];
    for r in 0..n {
        for c in r..n {
            let v = if r / d == c / d {
                m.get(r % d, c % d).clone()
            } else {
                cross(r, c)
            };
            entries[c * n + r] = v.clone();
            entries[r * n + c] = v;
        }
    }
    DenseMatrix { dim: n, entries }
}

/// `C_k` in `f64` under the default dense cap.
pub fn build_correlation(k: TreeDepth) -> Result<DenseMatrix<f64>> {
    DenseOracle::default().correlation(k)
}

/// `C_k⁻¹` in `f64` under the default dense cap.
pub fn build_precision(k: TreeDepth) -> Result<DenseMatrix<f64>> {
    DenseOracle::default().precision(k)
}

/// Every diagonal entry of `C_k⁻¹`, which is `1 + k/3`.
pub fn precision_diag_max<T: Scalar>(k: TreeDepth) -> T {
    let three = T::one() + T::one() + T::one();
    T::one() + T::from_u64(k.get() as u64) / three
}

/// Variances of contiguous leaf sums under a covariance matrix, via a 2-D prefix table.
///
/// With dyadic entries (as in `C_k`) the prefix sums are exact in `f64` for
/// any depth under the dense cap.
#[derive(Debug, Clone)]
pub struct RangeVariance<T> {
    n: usize,
    prefix: Vec<T>,
}

impl<T: Scalar> RangeVariance<T> {
    pub fn new(cov: &DenseMatrix<T>) -> Self {
        let n = cov.dim();
        let w = n + 1;
        let mut prefix = vec![T::zero(); w * w];
        for r in 0..n {
            let mut running = T::zero();
            for c in 0..n {
                running = running + cov.get(r, c).clone();
                prefix[(r + 1) * w + c + 1] = prefix[r * w + c + 1].clone() + running.clone();
            }
        }
        Self { n, prefix }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn p(&self, a: usize, b: usize) -> T {
        self.prefix[a * (self.n + 1) + b].clone()
    }

    /// `1ᵀ Σ[lo..=hi, lo..=hi] 1`.
    pub fn variance(&self, lo: usize, hi: usize) -> T {
        debug_assert!(lo <= hi && hi < self.n);
        let e = hi + 1;
        let cross = self.p(lo, e);
        self.p(e, e) - cross.clone() - cross + self.p(lo, lo)
    }

    /// Maximum over all `n(n+1)/2` contiguous ranges, with a maximizing range.
    pub fn max(&self) -> (T, (usize, usize)) {
        let mut best = self.variance(0, 0);
        let mut arg = (0, 0);
        for lo in 0..self.n {
            for hi in lo..self.n {
                let v = self.variance(lo, hi);
                if v > best {
                    best = v;
                    arg = (lo, hi);
                }
            }
        }
        (best, arg)
    }
}

/// Maximum variance (unit σ) over all contiguous leaf ranges of depth `k`.
pub fn max_range_variance(k: TreeDepth) -> Result<f64> {
    Ok(DenseOracle::default().range_variance::<f64>(k)?.max().0)
}

/// Length of the alternating prefix `2^(K-1) + 2^(K-3) + ... + 1` for odd `K`.
pub fn alternating_prefix_len(k: u32) -> Option<usize> {
    if k.is_multiple_of(2) {
        return None;
    }
    Some((0..=k / 2).map(|i| 1usize << (k - 1 - 2 * i)).sum())
}
