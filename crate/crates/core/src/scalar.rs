//! Scalar abstractions.
//!
//! The commitment-state model is written once against [`Scalar`] and
//! instantiated for `f32` and `f64`. Revenue shares use [`ShareScalar`], which
//! is implemented both for floating point and for exact rationals so that the
//! lottery payout can be audited without rounding.

use nalgebra::RealField;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Real scalar used by the bipartite state model.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Tolerance on the unit norm of a pure state.
    const NORM_TOL: f64;
    /// Tolerance on density-operator and Kraus invariants.
    const OP_TOL: f64;

    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        nalgebra::convert::<f64, Self>(x)
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const NORM_TOL: f64 = 1e-12;
    const OP_TOL: f64 = 1e-10;
}

impl Scalar for f32 {
    const NORM_TOL: f64 = 1e-5;
    const OP_TOL: f64 = 1e-4;
}

/// Number type a revenue share can be expressed in.
pub trait ShareScalar: Num + Clone {
    fn from_count(n: u64) -> Self;
}

impl ShareScalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
}

impl ShareScalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
}

impl ShareScalar for Ratio<u64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n)
    }
}

impl ShareScalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }
}
