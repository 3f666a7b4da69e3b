//! Scalar traits shared by the exact and the floating-point code paths.
//!
//! Integer-valued objects (scheme matrices, adjacency matrices, Laplacian
//! minors) are built over any [`Scalar`], so they can be held exactly in
//! `i64`, `i128` or [`Rational`](crate::Rational). Eigenvalue formulas need
//! [`Real`]; elimination-based routines need a [`Field`].

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Element type of the generic dense matrices in this crate.
pub trait Scalar:
    nalgebra::Scalar
    + Copy
    + Debug
    + Num
    + Signed
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("value representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: nalgebra::Scalar
        + Copy
        + Debug
        + Num
        + Signed
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
{
}

/// Scalars whose division is exact or correctly rounded, i.e. fields.
///
/// Integer types are deliberately excluded: their `/` truncates.
pub trait Field: Scalar {}

impl Field for f32 {}
impl Field for f64 {}
impl Field for Ratio<i64> {}
impl Field for Ratio<i128> {}

/// Floating-point scalars.
pub trait Real: Field + Float {
    fn tau() -> Self {
        Self::from_f64(std::f64::consts::TAU).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_as<T: Scalar>(vals: &[usize]) -> T {
        vals.iter().fold(T::zero(), |acc, &v| acc + T::from_usize_exact(v))
    }

    #[test]
    fn generic_sum_agrees_across_types() {
        let v = [1, 2, 3, 40];
        assert_eq!(sum_as::<i64>(&v), 46);
        assert_eq!(sum_as::<Ratio<i64>>(&v), Ratio::from_integer(46));
        assert_eq!(sum_as::<f64>(&v), 46.0);
    }
}
