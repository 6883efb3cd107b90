use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth accepted anywhere (2^40 leaves is far beyond memory anyway).
pub const MAX_DEPTH: u32 = 40;

/// Depth `k` of a perfect binary tree with `2^k` leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeDepth(u32);

impl TreeDepth {
    pub fn new(k: u32) -> Result<Self> {
        if k > MAX_DEPTH {
            return Err(Error::DepthOutOfRange {
                depth: k,
                min: 0,
                max: MAX_DEPTH,
            });
        }
        Ok(Self(k))
    }

    /// Depth whose leaf count is exactly `n`.
    pub fn for_leaves(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        Self::new(n.trailing_zeros())
    }

    /// Smallest depth with at least `n` leaves.
    pub fn covering(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("empty data vector".into()));
        }
        Self::new(n.next_power_of_two().trailing_zeros())
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn leaves(self) -> usize {
        1usize << self.0
    }

    pub fn nodes(self) -> usize {
        (1usize << (self.0 + 1)) - 1
    }

    pub fn internal_nodes(self) -> usize {
        self.leaves() - 1
    }
}

impl std::fmt::Display for TreeDepth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Heap-layout helpers for a perfect binary tree (root at 0, children 2m+1, 2m+2).
pub mod heap {
    #[inline]
    pub fn left(m: usize) -> usize {
        2 * m + 1
    }

    #[inline]
    pub fn right(m: usize) -> usize {
        2 * m + 2
    }

    /// Level (distance from the root) of heap node `m`.
    #[inline]
    pub fn level(m: usize) -> u32 {
        usize::BITS - 1 - (m + 1).leading_zeros()
    }

    /// Heap index of the `i`-th node (left to right) at `level`.
    #[inline]
    pub fn node_at(level: u32, i: usize) -> usize {
        (1usize << level) - 1 + i
    }

    /// Inclusive leaf range covered by node `m` in a tree of depth `k`.
    pub fn leaf_span(k: u32, m: usize) -> (usize, usize) {
        let lvl = level(m);
        let pos = m + 1 - (1usize << lvl);
        let width = 1usize << (k - lvl);
        (pos * width, pos * width + width - 1)
    }

    /// Bit-string label of node `m` (empty string for the root).
    pub fn label(m: usize) -> String {
        let lvl = level(m);
        let pos = m + 1 - (1usize << lvl);
        (0..lvl)
            .rev()
            .map(|b| if (pos >> b) & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}
