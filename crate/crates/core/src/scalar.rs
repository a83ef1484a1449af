//! Scalar abstraction shared by the numeric modules.

use nalgebra as na;
use num_traits as nt;

/// Floating point type the geometry, fusion, pipeline and analysis code is written against.
///
/// Implemented for `f32` and `f64`. Tolerances quoted in the public API are
/// `f64` values; [`Real::tol`] widens them to what the narrower type can resolve.
pub trait Real:
    na::RealField + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + Copy + Default
{
    /// Machine epsilon.
    const EPS: Self;

    /// Converts an `f64` literal.
    fn lit(v: f64) -> Self;

    /// Lossy conversion for reporting and serialization boundaries.
    fn to_f64_lossy(self) -> f64;

    /// `base` or a few thousand ulps, whichever is larger.
    fn tol(base: f64) -> Self {
        let floor = Self::EPS * Self::lit(4096.0);
        let b = Self::lit(base);
        if b > floor {
            b
        } else {
            floor
        }
    }

    /// Total order usable for sorting, NaN sorts last.
    fn total_cmp_real(&self, other: &Self) -> core::cmp::Ordering {
        self.to_f64_lossy().total_cmp(&other.to_f64_lossy())
    }
}

impl Real for f32 {
    const EPS: Self = f32::EPSILON;

    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const EPS: Self = f64::EPSILON;

    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
