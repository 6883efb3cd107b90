use crate::error::Result;
use crate::rng::GaussianSource;
use crate::scalar::Real;

use super::{check_sigma, split_node, SPLIT_COEFF};

/// Incremental cascade sampler for an unbounded stream of leaves.
///
/// Leaves are produced left to right. Only the split pairs along the path to
/// the most recent leaf are kept. When the tree is full the current root
/// becomes the left child of a new root and its right sibling is drawn from
/// the conditional law `-X0/2 + (√3/2)Y`, so any prefix of `2^k` leaves has
/// covariance `σ² C_k`. Work per leaf is `O(log n)` worst case, `O(1)`
/// amortized.
///
/// The caller chooses σ; no accounting is made for the tree growing past the
/// size σ was calibrated for.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState<T> {
    sigma: T,
    depth: u32,
    count: u64,
    root: Option<T>,
    // splits[d] holds the children of the path node at level d.
    splits: Vec<(T, T)>,
}

impl<T: Real> StreamState<T> {
    pub fn new(sigma: T) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self {
            sigma,
            depth: 0,
            count: 0,
            root: None,
            splits: Vec::new(),
        })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn capacity(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Noise of the current root (the sum of every leaf emitted once the tree is full).
    pub fn root(&self) -> Option<T> {
        self.root
    }

    /// Node values from the root down to the most recently emitted leaf.
    pub fn spine(&self) -> Vec<T> {
        let Some(root) = self.root else {
            return Vec::new();
        };
        let last = self.count - 1;
        let mut path = Vec::with_capacity(self.depth as usize + 1);
        path.push(root);
        for (d, &(l, r)) in self.splits.iter().enumerate() {
            let bit = (last >> (self.depth as usize - 1 - d)) & 1;
            path.push(if bit == 1 { r } else { l });
        }
        path
    }

    /// Noise for the next stream position.
    pub fn next_noise<S: GaussianSource<T> + ?Sized>(&mut self, src: &mut S) -> T {
        let sigma = self.sigma;
        let Some(root) = self.root else {
            let v = sigma * src.standard_normal();
            self.root = Some(v);
            self.count = 1;
            return v;
        };

        let (mut node, from_level) = if self.count == self.capacity() {
            let y = sigma * src.standard_normal();
            let sibling = root * T::lit(-0.5) + y * T::lit(SPLIT_COEFF);
            self.root = Some(root + sibling);
            self.splits.insert(0, (root, sibling));
            self.depth += 1;
            (sibling, 1)
        } else {
            // Branch off at the level where the new index first differs from the last.
            let c = self.count;
            let b = 63 - (c ^ (c - 1)).leading_zeros();
            let level = self.depth - 1 - b;
            (self.splits[level as usize].1, level + 1)
        };

        for level in from_level..self.depth {
            let y = sigma * src.standard_normal();
            let pair = split_node(node, y);
            self.splits[level as usize] = pair;
            node = pair.0;
        }
        self.count += 1;
        node
    }
}

/// Functional form of [`StreamState::next_noise`].
pub fn stream_next<T: Real, S: GaussianSource<T> + ?Sized>(
    mut state: StreamState<T>,
    src: &mut S,
) -> (T, StreamState<T>) {
    let v = state.next_noise(src);
    (v, state)
}
