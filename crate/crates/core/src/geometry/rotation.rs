use core::ops::Mul;

use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Quaternion, Vec3};
use crate::scalar::Real;

pub type Mat3<T> = na::Matrix3<T>;

/// Orthonormality and determinant tolerance for validated rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// Smallest singular value accepted by [`project_to_so3`].
pub const DEGENERATE_SINGULAR_VALUE: f64 = 1e-12;
/// Condition number bound for [`left_divide`].
pub const MAX_CONDITION_NUMBER: f64 = 1e12;
/// Largest pairwise geodesic angle tolerated by [`average_rotations`].
pub const MAX_AVERAGING_SPREAD_RAD: f64 = core::f64::consts::FRAC_PI_2;

/// Member of SO(3). Acts on column vectors, mapping body-frame vectors into
/// the reference frame.
///
/// Serializes row-major as `[[r00, r01, r02], [r10, ...], [r20, ...]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[T; 3]; 3]", into = "[[T; 3]; 3]")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RotationMatrix<T: Real>(Mat3<T>);

impl<T: Real> RotationMatrix<T> {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates orthonormality and `det = +1` at [`ROTATION_TOLERANCE`].
    pub fn try_from_matrix(m: Mat3<T>) -> Result<Self, GeometryError> {
        let tol = T::tol(ROTATION_TOLERANCE);
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if !(ortho <= tol) || !((det - T::one()).abs() <= tol) {
            return Err(GeometryError::NotARotation {
                orthogonality_error: ortho.to_f64_lossy(),
                determinant: det.to_f64_lossy(),
            });
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: [[T; 3]; 3]) -> Result<Self, GeometryError> {
        Self::try_from_matrix(Mat3::from_fn(|i, j| rows[i][j]))
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Result<Self, GeometryError> {
        Quaternion::from_axis_angle(axis, angle).map(|q| Self::from_unit_quaternion(&q))
    }

    pub fn about_x(angle: T) -> Self {
        Self::from_unit_quaternion(&Quaternion::from_rotation_vector(Vec3::unit_x() * angle))
    }

    pub fn about_y(angle: T) -> Self {
        Self::from_unit_quaternion(&Quaternion::from_rotation_vector(Vec3::unit_y() * angle))
    }

    pub fn about_z(angle: T) -> Self {
        Self::from_unit_quaternion(&Quaternion::from_rotation_vector(Vec3::unit_z() * angle))
    }

    /// Smallest rotation taking direction `from` onto direction `to`.
    pub fn between(from: Vec3<T>, to: Vec3<T>) -> Result<Self, GeometryError> {
        let a = from.normalized().ok_or(GeometryError::ZeroAxis)?;
        let b = to.normalized().ok_or(GeometryError::ZeroAxis)?;
        let axis = a.cross(&b);
        let s = axis.norm();
        let c = a.dot(&b);
        if s <= T::EPS {
            if c > T::zero() {
                return Ok(Self::identity());
            }
            // antiparallel: half turn about any axis orthogonal to `a`
            let helper = if a.x.abs() < T::lit(0.9) {
                Vec3::unit_x()
            } else {
                Vec3::unit_y()
            };
            return Self::from_axis_angle(a.cross(&helper), T::pi());
        }
        Self::from_axis_angle(axis, s.atan2(c))
    }

    /// Assumes `q` is unit norm; see [`quat_to_rotation`] for the checked path.
    pub(crate) fn from_unit_quaternion(q: &Quaternion<T>) -> Self {
        let (w, x, y, z) = (q.w, q.x, q.y, q.z);
        let one = T::one();
        let two = T::lit(2.0);
        Self(Mat3::new(
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        ))
    }

    /// Unit quaternion with `w ≥ 0` (Shepperd's method).
    pub fn to_quaternion(&self) -> Quaternion<T> {
        let m = &self.0;
        let one = T::one();
        let two = T::lit(2.0);
        let quarter = T::lit(0.25);
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > m[(0, 0)] && trace > m[(1, 1)] && trace > m[(2, 2)] {
            let s = (one + trace).sqrt() * two;
            Quaternion::new(
                quarter * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (one + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * two;
            Quaternion::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                quarter * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (one + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * two;
            Quaternion::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                quarter * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (one + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * two;
            Quaternion::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                quarter * s,
            )
        };
        let q = q.renormalized();
        if q.w < T::zero() {
            q.neg()
        } else {
            q
        }
    }

    /// Rotation vector (axis scaled by angle in `[0, π]`).
    pub fn log(&self) -> Vec3<T> {
        let q = self.to_quaternion();
        let v = Vec3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s <= T::EPS {
            return v * T::lit(2.0);
        }
        let angle = T::lit(2.0) * s.atan2(q.w);
        v * (angle / s)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> T {
        self.to_quaternion().angle()
    }

    /// Geodesic distance `angle(selfᵀ·other)`.
    pub fn angle_to(&self, other: &Self) -> T {
        (self.transpose() * *other).angle()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::from_na(&(self.0 * v.to_na()))
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.0
    }

    pub fn rows(&self) -> [[T; 3]; 3] {
        let m = &self.0;
        core::array::from_fn(|i| core::array::from_fn(|j| m[(i, j)]))
    }

    pub fn determinant(&self) -> T {
        self.0.determinant()
    }

    /// Frobenius distance to another rotation.
    pub fn frobenius_distance(&self, other: &Self) -> T {
        (self.0 - other.0).norm()
    }

    pub fn cast<U: Real>(&self) -> RotationMatrix<U> {
        RotationMatrix(self.0.map(|v| U::lit(v.to_f64_lossy())))
    }
}

impl<T: Real> Mul for RotationMatrix<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self(self.0 * o.0)
    }
}

impl<T: Real> TryFrom<[[T; 3]; 3]> for RotationMatrix<T> {
    type Error = GeometryError;
    fn try_from(rows: [[T; 3]; 3]) -> Result<Self, Self::Error> {
        Self::from_rows(rows)
    }
}

impl<T: Real> From<RotationMatrix<T>> for [[T; 3]; 3] {
    fn from(r: RotationMatrix<T>) -> Self {
        r.rows()
    }
}

/// Rotation matrix of a quaternion.
///
/// Inputs within [`super::quaternion::HARD_NORM_TOLERANCE`] of unit norm are
/// normalized first; anything further off is rejected.
pub fn quat_to_rotation<T: Real>(q: &Quaternion<T>) -> Result<RotationMatrix<T>, GeometryError> {
    let q = q.normalized()?;
    Ok(RotationMatrix::from_unit_quaternion(&q))
}

/// Nearest rotation in Frobenius norm.
///
/// `m = U·Σ·Vᵀ` gives `R = U·D·Vᵀ`, with `D` flipping the direction of the
/// smallest singular value when `det(U·Vᵀ) < 0`.
pub fn project_to_so3<T: Real>(m: &Mat3<T>) -> Result<RotationMatrix<T>, GeometryError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(GeometryError::DegenerateMatrix { smallest_singular_value: f64::NAN }),
    };
    let sv = svd.singular_values;
    let (min_idx, min_sv) = sv
        .iter()
        .enumerate()
        .fold((0, sv[0]), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    if !(min_sv >= T::lit(DEGENERATE_SINGULAR_VALUE)) {
        return Err(GeometryError::DegenerateMatrix {
            smallest_singular_value: min_sv.to_f64_lossy(),
        });
    }
    let mut d = na::Vector3::repeat(T::one());
    if (u * v_t).determinant() < T::zero() {
        d[min_idx] = -T::one();
    }
    Ok(RotationMatrix(u * Mat3::from_diagonal(&d) * v_t))
}

fn check_invertible<T: Real>(a: &Mat3<T>) -> Result<(), GeometryError> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > T::zero()) || max / min >= T::lit(MAX_CONDITION_NUMBER) {
        let condition = if min > T::zero() {
            (max / min).to_f64_lossy()
        } else {
            f64::INFINITY
        };
        return Err(GeometryError::SingularSystem { condition });
    }
    Ok(())
}

/// Solves `A·X = B` for a 3×3 right-hand side.
pub fn left_divide<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Result<Mat3<T>, GeometryError> {
    check_invertible(a)?;
    a.lu()
        .solve(b)
        .ok_or(GeometryError::SingularSystem { condition: f64::INFINITY })
}

/// Solves `A·x = b` for a vector right-hand side.
pub fn left_divide_vec<T: Real>(a: &Mat3<T>, b: &Vec3<T>) -> Result<Vec3<T>, GeometryError> {
    check_invertible(a)?;
    a.lu()
        .solve(&b.to_na())
        .map(|x| Vec3::from_na(&x))
        .ok_or(GeometryError::SingularSystem { condition: f64::INFINITY })
}

/// Chordal mean: entrywise mean of the samples projected back onto SO(3).
///
/// Samples are summed in a canonical (sorted) order so that any permutation
/// of the same multiset gives a bitwise-identical result.
pub fn average_rotations<T: Real>(
    samples: &[RotationMatrix<T>],
) -> Result<RotationMatrix<T>, GeometryError> {
    if samples.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let limit = T::lit(MAX_AVERAGING_SPREAD_RAD);
    let mut worst = T::zero();
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            let ang = a.angle_to(b);
            if ang > worst {
                worst = ang;
            }
        }
    }
    if worst >= limit {
        return Err(GeometryError::ExcessiveSpread {
            degrees: worst.to_f64_lossy().to_degrees(),
        });
    }

    let mut sorted: Vec<&RotationMatrix<T>> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| x.total_cmp_real(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut sum = Mat3::zeros();
    for r in sorted {
        sum += r.0;
    }
    let mean = sum / T::from_usize(samples.len()).expect("sample count fits scalar");
    project_to_so3(&mean)
}
