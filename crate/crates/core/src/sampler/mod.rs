//! Linear-time correlated Gaussian noise over binary hierarchies.
//!
//! Every sampler builds noise top-down: a node carrying `X` hands its
//! children `X/2 + (√3/2)Y` and `X/2 - (√3/2)Y` with a fresh independent `Y`.
//! The children sum to the parent, each keeps variance `σ²`, and siblings
//! have correlation `-1/2`. Applied level by level this yields leaf noise
//! distributed as `N(0, σ² C_k)` at a cost of one draw per node.
//!
//! Randomness is drawn only through [`GaussianSource`], in heap order: the
//! root first, then one `Y` per internal node.

mod dense;
mod general;
mod grid;
mod record;
mod stream;

pub use dense::CholeskySampler;
pub use general::{general_tree_sample, Children, GeneralTree};
pub use grid::{sample_2d, NoiseGrid2D};
pub use record::NoiseTreeRecord;
pub use stream::{stream_next, StreamState};

use crate::depth::{heap, TreeDepth};
use crate::error::{Error, Result};
use crate::rng::GaussianSource;
use crate::scalar::Real;

/// `√3 / 2`
pub const SPLIT_COEFF: f64 = 0.866_025_403_784_438_6;

/// Split parent noise `x` into two children using the independent draw `y`.
#[inline]
pub fn split_node<T: Real>(x: T, y: T) -> (T, T) {
    let half = x * T::lit(0.5);
    let spread = y * T::lit(SPLIT_COEFF);
    (half + spread, half - spread)
}

pub(crate) fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if !(sigma.is_finite() && sigma > T::zero()) {
        return Err(Error::InvalidSigma(sigma.as_f64()));
    }
    Ok(())
}

/// Noise for every node of a perfect binary tree, in heap order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTree<T> {
    depth: TreeDepth,
    sigma: T,
    values: Vec<T>,
}

impl<T: Real> NoiseTree<T> {
    pub(crate) fn from_parts(depth: TreeDepth, sigma: T, values: Vec<T>) -> Result<Self> {
        if values.len() != depth.nodes() {
            return Err(Error::LengthMismatch {
                expected: depth.nodes(),
                got: values.len(),
            });
        }
        Ok(Self {
            depth,
            sigma,
            values,
        })
    }

    pub fn depth(&self) -> TreeDepth {
        self.depth
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn node(&self, m: usize) -> T {
        self.values[m]
    }

    /// Leaf noises, left to right.
    pub fn leaves(&self) -> &[T] {
        &self.values[self.depth.internal_nodes()..]
    }

    /// Nodes at `level`, left to right.
    pub fn level(&self, level: u32) -> &[T] {
        let start = heap::node_at(level, 0);
        &self.values[start..start + (1usize << level)]
    }

    /// Largest `|parent - (left + right)|` over internal nodes.
    pub fn max_additivity_error(&self) -> T {
        (0..self.depth.internal_nodes())
            .map(|m| {
                (self.values[m] - (self.values[heap::left(m)] + self.values[heap::right(m)])).abs()
            })
            .fold(T::zero(), T::max)
    }
}

impl<T: Real + std::fmt::Display> std::fmt::Display for NoiseTree<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (m, v) in self.values.iter().enumerate() {
            let label = heap::label(m);
            let label = if label.is_empty() { "∅" } else { label.as_str() };
            writeln!(f, "{label}\t{v}")?;
        }
        Ok(())
    }
}

/// Work performed by one cascade run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleCost {
    pub gaussian_draws: u64,
    pub arithmetic_ops: u64,
}

trait Meter {
    fn draw(&mut self);
    fn ops(&mut self, n: u64);
}

impl Meter for () {
    #[inline(always)]
    fn draw(&mut self) {}
    #[inline(always)]
    fn ops(&mut self, _: u64) {}
}

impl Meter for SampleCost {
    fn draw(&mut self) {
        self.gaussian_draws += 1;
    }
    fn ops(&mut self, n: u64) {
        self.arithmetic_ops += n;
    }
}

fn cascade_into<T: Real, S: GaussianSource<T> + ?Sized, M: Meter>(
    values: &mut [T],
    sigma: T,
    src: &mut S,
    meter: &mut M,
) {
    meter.draw();
    meter.ops(1);
    values[0] = sigma * src.standard_normal();
    let internal = values.len() / 2;
    for m in 0..internal {
        meter.draw();
        // scale, halve, spread, add, subtract
        meter.ops(5);
        let y = sigma * src.standard_normal();
        let (a, b) = split_node(values[m], y);
        values[heap::left(m)] = a;
        values[heap::right(m)] = b;
    }
}

/// Cascade sampling: noise for all `2^(k+1) - 1` nodes with leaves `~ N(0, σ² C_k)`.
pub fn cascade_sample<T, S>(k: TreeDepth, sigma: T, src: &mut S) -> Result<NoiseTree<T>>
where
    T: Real,
    S: GaussianSource<T> + ?Sized,
{
    check_sigma(sigma)?;
    let mut values = vec![T::zero(); k.nodes()];
    cascade_into(&mut values, sigma, src, &mut ());
    NoiseTree::from_parts(k, sigma, values)
}

/// [`cascade_sample`] that also reports the number of draws and arithmetic operations.
pub fn cascade_sample_metered<T, S>(
    k: TreeDepth,
    sigma: T,
    src: &mut S,
) -> Result<(NoiseTree<T>, SampleCost)>
where
    T: Real,
    S: GaussianSource<T> + ?Sized,
{
    check_sigma(sigma)?;
    let mut values = vec![T::zero(); k.nodes()];
    let mut cost = SampleCost::default();
    cascade_into(&mut values, sigma, src, &mut cost);
    Ok((NoiseTree::from_parts(k, sigma, values)?, cost))
}

/// Heap-ordered cascade written into a reusable buffer; leaves are the last `2^k` entries.
pub fn cascade_sample_into<T, S>(
    k: TreeDepth,
    sigma: T,
    src: &mut S,
    scratch: &mut Vec<T>,
) -> Result<()>
where
    T: Real,
    S: GaussianSource<T> + ?Sized,
{
    check_sigma(sigma)?;
    scratch.clear();
    scratch.resize(k.nodes(), T::zero());
    cascade_into(scratch.as_mut_slice(), sigma, src, &mut ());
    Ok(())
}
