use core::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Vec3};
use crate::scalar::Real;

/// Deviation from unit norm that is silently normalized away.
pub const SOFT_NORM_TOLERANCE: f64 = 1e-6;
/// Deviation from unit norm beyond which a quaternion is rejected.
pub const HARD_NORM_TOLERANCE: f64 = 0.1;

/// Orientation quaternion `w + i·x + j·y + k·z` (Hamilton convention).
///
/// Components are stored as given; [`Quaternion::normalized`] and
/// [`super::quat_to_rotation`] enforce the unit-norm invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub const fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Result<Self, GeometryError> {
        let axis = axis.normalized().ok_or(GeometryError::ZeroAxis)?;
        let half = angle / T::lit(2.0);
        let s = half.sin();
        Ok(Self::new(half.cos(), axis.x * s, axis.y * s, axis.z * s))
    }

    /// Exponential map of a rotation vector (axis scaled by angle).
    pub fn from_rotation_vector(v: Vec3<T>) -> Self {
        let angle = v.norm();
        let half = angle / T::lit(2.0);
        // sin(a/2)/a, with the series near zero
        let k = if angle < T::lit(1e-4) {
            T::lit(0.5) - angle * angle / T::lit(48.0)
        } else {
            half.sin() / angle
        };
        Self::new(half.cos(), v.x * k, v.y * k, v.z * k)
    }

    pub fn norm_squared(&self) -> T {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }

    /// Unit quaternion, rejecting inputs further than [`HARD_NORM_TOLERANCE`]
    /// from unit norm.
    pub fn normalized(&self) -> Result<Self, GeometryError> {
        let n = self.norm();
        if !n.is_finite() || (n - T::one()).abs() > T::lit(HARD_NORM_TOLERANCE) {
            return Err(GeometryError::NonUnitQuaternion {
                norm: n.to_f64_lossy(),
            });
        }
        Ok(self.renormalized())
    }

    /// Divides by the norm unconditionally. Used after integration steps where
    /// the drift is a few ulps.
    pub(crate) fn renormalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    /// `true` when within [`SOFT_NORM_TOLERANCE`] of unit norm.
    pub fn is_unit(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::lit(SOFT_NORM_TOLERANCE)
    }

    /// Rotates a vector by this (assumed unit) quaternion.
    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let u = Vec3::new(self.x, self.y, self.z);
        let two = T::lit(2.0);
        let t = u.cross(&v) * two;
        v + t * self.w + u.cross(&t)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> T {
        let v = Vec3::new(self.x, self.y, self.z).norm();
        T::lit(2.0) * v.atan2(self.w.abs())
    }

    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cast<U: Real>(self) -> Quaternion<U> {
        Quaternion::new(
            U::lit(self.w.to_f64_lossy()),
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;

    /// Hamilton product; `a * b` applies `b` first.
    fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}
