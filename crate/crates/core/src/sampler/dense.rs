use crate::correlation::DenseMatrix;
use crate::error::Result;
use crate::rng::GaussianSource;
use crate::scalar::Real;

use super::check_sigma;

/// Reference multivariate normal sampler: `σ L z` with `L Lᵀ = Σ`.
///
/// `O(n³)` setup and `O(n²)` per draw. Used to cross-check the cascade
/// samplers at small sizes.
#[derive(Debug, Clone)]
pub struct CholeskySampler<T> {
    factor: DenseMatrix<T>,
    z: Vec<T>,
}

impl<T: Real> CholeskySampler<T> {
    pub fn new(cov: &DenseMatrix<T>) -> Result<Self> {
        Ok(Self {
            factor: cov.cholesky()?,
            z: vec![T::zero(); cov.dim()],
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn sample_into<S: GaussianSource<T> + ?Sized>(
        &mut self,
        sigma: T,
        src: &mut S,
        out: &mut [T],
    ) -> Result<()> {
        check_sigma(sigma)?;
        for z in self.z.iter_mut() {
            *z = src.standard_normal();
        }
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.factor.row(r)[..=r];
            let dot = row
                .iter()
                .zip(&self.z)
                .fold(T::zero(), |acc, (&l, &z)| acc + l * z);
            *o = sigma * dot;
        }
        Ok(())
    }

    pub fn sample<S: GaussianSource<T> + ?Sized>(&mut self, sigma: T, src: &mut S) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim()];
        self.sample_into(sigma, src, &mut out)?;
        Ok(out)
    }
}
