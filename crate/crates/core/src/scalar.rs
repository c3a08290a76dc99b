//! Floating-point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar used for amplitudes, Kraus entries and times.
///
/// Implemented for `f32` and `f64`. Validation tolerances scale with the
/// precision of the type, so an `f32` density matrix is checked against
/// `1e-5` rather than the `1e-12` used for `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Tolerance for norm, trace and Hermiticity checks.
    fn validation_tol() -> Self;

    /// Tolerance for negative eigenvalues of a density matrix.
    fn eigen_tol() -> Self;

    /// Draws from the standard normal distribution.
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws uniformly from `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

macro_rules! impl_real {
    ($t:ty, $tol:expr, $eig:expr) => {
        impl Real for $t {
            fn validation_tol() -> Self {
                $tol
            }

            fn eigen_tol() -> Self {
                $eig
            }

            fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_real!(f64, 1e-12, 1e-10);
impl_real!(f32, 1e-5, 1e-4);
