//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Everything that needs square roots or
/// eigenvalues (which is most of this crate) requires a `Float`, so exact
/// rational scalars are not supported.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Default absolute tolerance for inner fixed-point loops.
    const INNER_TOL: f64;
    /// Default tolerance for Loewner and positivity comparisons, before
    /// scaling by `1 + spectral radius`.
    const LOEWNER_TOL: f64;

    /// Converts an `f64` literal. Never fails for finite input.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Scalar for f64 {
    const INNER_TOL: f64 = 1e-12;
    const LOEWNER_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const INNER_TOL: f64 = 1e-6;
    const LOEWNER_TOL: f64 = 1e-5;
}
