use crate::depth::{heap, TreeDepth};
use crate::error::Result;
use crate::rng::GaussianSource;
use crate::scalar::Real;

use super::{cascade_sample_into, check_sigma, split_node};

/// Noise for every pair (row-tree node, column-tree node) of a `2^k1 × 2^k2` table.
///
/// Stored row-major with both axes in heap order, so entry `(I, J)` is the
/// noise on the sub-table spanned by row node `I` and column node `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid2D<T> {
    depths: (TreeDepth, TreeDepth),
    sigma: T,
    values: Vec<T>,
}

impl<T: Real> NoiseGrid2D<T> {
    pub fn depths(&self) -> (TreeDepth, TreeDepth) {
        self.depths
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn row_nodes(&self) -> usize {
        self.depths.0.nodes()
    }

    pub fn col_nodes(&self) -> usize {
        self.depths.1.nodes()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row_node: usize, col_node: usize) -> T {
        self.values[row_node * self.col_nodes() + col_node]
    }

    /// Noise of leaf cell `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> T {
        self.get(
            heap::node_at(self.depths.0.get(), i),
            heap::node_at(self.depths.1.get(), j),
        )
    }

    /// Leaf cells as a `2^k1 × 2^k2` row-major table.
    pub fn leaf_table(&self) -> Vec<T> {
        let (r, c) = (self.depths.0.leaves(), self.depths.1.leaves());
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.cell(i, j));
            }
        }
        out
    }

    /// Largest violation of row-wise or column-wise additivity.
    pub fn max_additivity_error(&self) -> T {
        let (rn, cn) = (self.row_nodes(), self.col_nodes());
        let mut worst = T::zero();
        for i in 0..rn {
            for j in 0..cn {
                let v = self.get(i, j);
                if heap::right(i) < rn {
                    let e = (v - self.get(heap::left(i), j) - self.get(heap::right(i), j)).abs();
                    worst = worst.max(e);
                }
                if heap::right(j) < cn {
                    let e = (v - self.get(i, heap::left(j)) - self.get(i, heap::right(j))).abs();
                    worst = worst.max(e);
                }
            }
        }
        worst
    }
}

/// Two-dimensional cascade over row and column trees.
///
/// The whole-row entry `(∅, ·)` is a 1-D cascade across columns. Each row
/// node then splits pointwise over every column node using an independent
/// 1-D cascade as its `Y`, which keeps both axis identities and unit
/// variance for every sub-table.
pub fn sample_2d<T, S>(k1: TreeDepth, k2: TreeDepth, sigma: T, src: &mut S) -> Result<NoiseGrid2D<T>>
where
    T: Real,
    S: GaussianSource<T> + ?Sized,
{
    check_sigma(sigma)?;
    let (rn, cn) = (k1.nodes(), k2.nodes());
    let mut values = vec![T::zero(); rn * cn];
    let mut row = Vec::with_capacity(cn);
    cascade_sample_into(k2, sigma, src, &mut row)?;
    values[..cn].copy_from_slice(&row);
    for m in 0..k1.internal_nodes() {
        cascade_sample_into(k2, sigma, src, &mut row)?;
        let (l, r) = (heap::left(m), heap::right(m));
        for (j, &y) in row.iter().enumerate() {
            let (a, b) = split_node(values[m * cn + j], y);
            values[l * cn + j] = a;
            values[r * cn + j] = b;
        }
    }
    Ok(NoiseGrid2D {
        depths: (k1, k2),
        sigma,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::build_correlation;
    use crate::rng::SeededRng;
    use crate::sampler::testing::{covariance_of, linear_map};

    fn d(k: u32) -> TreeDepth {
        TreeDepth::new(k).unwrap()
    }

    #[test]
    fn consistency_identities() {
        let g = sample_2d(d(3), d(2), 1.0f64, &mut SeededRng::new(4)).unwrap();
        assert!(g.max_additivity_error() < 1e-9);
        // X_{00} + X_{10} = X_{0·} at k1 = k2 = 1
        let g = sample_2d(d(1), d(1), 1.0f64, &mut SeededRng::new(9)).unwrap();
        let col0 = g.cell(0, 0) + g.cell(1, 0);
        assert!((col0 - g.get(0, 1)).abs() < 1e-12);
        let col1 = g.cell(0, 1) + g.cell(1, 1);
        assert!((col1 - g.get(0, 2)).abs() < 1e-12);
    }

    #[test]
    fn depth_zero_axes() {
        let g = sample_2d(d(0), d(0), 1.0f64, &mut SeededRng::new(1)).unwrap();
        assert_eq!(g.values().len(), 1);
        let g = sample_2d(d(2), d(0), 1.0f64, &mut SeededRng::new(1)).unwrap();
        assert_eq!(g.leaf_table().len(), 4);
    }

    #[test]
    fn linear_map_law() {
        let (k1, k2) = (d(2), d(2));
        let draws = k1.leaves() * k2.leaves();
        let cols = linear_map(draws, |src| {
            sample_2d(k1, k2, 1.0, src).unwrap().values().to_vec()
        });
        let cn = k2.nodes();
        // every node pair has unit variance
        let all: Vec<usize> = (0..k1.nodes() * cn).collect();
        let cov = covariance_of(&cols, &all);
        for (i, row) in cov.iter().enumerate() {
            assert!((row[i] - 1.0).abs() < 1e-12, "pair {i}");
        }
        // any single row of leaf cells has covariance C_2
        let c2 = build_correlation(k2).unwrap();
        for i in 0..k1.leaves() {
            let rnode = heap::node_at(2, i);
            let idx: Vec<usize> = (0..4).map(|j| rnode * cn + heap::node_at(2, j)).collect();
            let cov = covariance_of(&cols, &idx);
            for a in 0..4 {
                for b in 0..4 {
                    assert!((cov[a][b] - c2.get(a, b)).abs() < 1e-12);
                }
            }
        }
    }
}
