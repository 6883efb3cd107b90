//! Numeric traits shared by the dense oracle and the samplers.
//!
//! [`Scalar`] is the field the covariance recursion runs over; it covers
//! `f32`, `f64` and exact rationals. [`Real`] adds what the samplers need
//! (square roots, conversion from `f64`).

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub trait Scalar:
    Clone + PartialOrd + Num + Neg<Output = Self> + ToPrimitive + Debug + Send + Sync + 'static
{
    fn from_u64(v: u64) -> Self {
        // Binary expansion keeps this exact for rational types.
        let two = Self::one() + Self::one();
        let mut acc = Self::zero();
        for bit in (0..64).rev() {
            acc = acc * two.clone();
            if (v >> bit) & 1 == 1 {
                acc = acc + Self::one();
            }
        }
        acc
    }

    /// 2^-e, exactly for rationals and binary floats.
    fn inv_pow2(e: u32) -> Self {
        let two = Self::one() + Self::one();
        Self::one() / num_traits::pow(two, e as usize)
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + PartialOrd + Num + Neg<Output = T> + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating-point scalars usable by the samplers.
pub trait Real: Scalar + Float + FromPrimitive + Copy {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl<T> Real for T where T: Scalar + Float + FromPrimitive + Copy {}
