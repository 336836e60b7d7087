//! Floating point abstraction shared by the chain numerics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the Markov-chain numerics are generic over (`f32` or `f64`).
///
/// Tolerances are attached to the type so that single precision callers get
/// thresholds they can actually meet.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Allowed deviation of a row sum from one.
    const ROW_SUM_TOL: f64;
    /// Relative residual targeted by the Perron eigen refinement.
    const EIGEN_RESIDUAL: f64;
    /// Allowed deviation of `mu P` from `mu` when a caller supplies `mu`.
    const STATIONARY_TOL: f64;
    /// Entries at or below this are treated as structural zeros.
    const POSITIVE_EPS: f64;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const ROW_SUM_TOL: f64 = 1e-10;
    const EIGEN_RESIDUAL: f64 = 1e-12;
    const STATIONARY_TOL: f64 = 1e-8;
    const POSITIVE_EPS: f64 = 1e-15;
}

impl Scalar for f32 {
    const ROW_SUM_TOL: f64 = 1e-5;
    const EIGEN_RESIDUAL: f64 = 1e-6;
    const STATIONARY_TOL: f64 = 1e-4;
    const POSITIVE_EPS: f64 = 1e-15;
}
