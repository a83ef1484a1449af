use nalgebra as na;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::geometry::{project_to_so3, Mat3, RotationMatrix, Vec3};
use crate::scalar::Real;

/// Rotation followed by translation: `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RigidTransform<T: Real> {
    pub r: RotationMatrix<T>,
    pub t: Vec3<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn identity() -> Self {
        Self {
            r: RotationMatrix::identity(),
            t: Vec3::zero(),
        }
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.r.apply(p) + self.t
    }

    pub fn inverse(&self) -> Self {
        let r = self.r.transpose();
        Self { r, t: -r.apply(self.t) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration<T: Real> {
    pub transform: RigidTransform<T>,
    pub aligned: Vec<Vec3<T>>,
    pub rmsd_m: T,
}

fn outer<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Mat3<T> {
    a.to_na() * b.to_na().transpose()
}

/// Least-squares rigid alignment of index-matched point sets (Kabsch).
///
/// Minimizes `Σ‖R·sᵢ + t − targetᵢ‖²` over proper rotations; the reflection
/// case is resolved by flipping the weakest singular direction.
pub fn rigid_register<T: Real>(
    source: &[Vec3<T>],
    target: &[Vec3<T>],
) -> Result<Registration<T>, AnalysisError> {
    if source.len() != target.len() {
        return Err(AnalysisError::ShapeMismatch(format!(
            "{} source points vs {} target points",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 3 {
        return Err(AnalysisError::ShapeMismatch(format!(
            "need at least 3 points, got {}",
            source.len()
        )));
    }
    let cs = Vec3::mean(source).expect("non-empty");
    let ct = Vec3::mean(target).expect("non-empty");

    let mut spread = Mat3::zeros();
    let mut cross = Mat3::zeros();
    for (s, t) in source.iter().zip(target) {
        let ds = *s - cs;
        spread += outer(ds, ds);
        cross += outer(ds, *t - ct);
    }

    let mut sv: Vec<T> = spread.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp_real(a));
    if !(sv[0] > T::zero()) || !(sv[1] > sv[0] * T::tol(1e-12)) {
        return Err(AnalysisError::DegenerateGeometry);
    }

    let svd = cross.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(AnalysisError::DegenerateGeometry),
    };
    let v = v_t.transpose();
    let ut = u.transpose();
    let mut d = na::Vector3::repeat(T::one());
    if (v * ut).determinant() < T::zero() {
        let s = &svd.singular_values;
        let weakest = (0..3).fold(0, |m, i| if s[i] < s[m] { i } else { m });
        d[weakest] = -T::one();
    }
    // snap the product back onto SO(3) to shed rounding in U·Vᵀ
    let r = project_to_so3(&(v * Mat3::from_diagonal(&d) * ut))?;
    let transform = RigidTransform {
        r,
        t: ct - r.apply(cs),
    };

    let aligned: Vec<Vec3<T>> = source.iter().map(|&p| transform.apply(p)).collect();
    let sq: T = aligned
        .iter()
        .zip(target)
        .fold(T::zero(), |acc, (a, t)| acc + (*a - *t).norm_squared());
    let rmsd_m = (sq / T::from_usize(source.len()).expect("count fits scalar")).sqrt();
    Ok(Registration {
        transform,
        aligned,
        rmsd_m,
    })
}
