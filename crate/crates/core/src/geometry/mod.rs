//! Rotation algebra and baton forward kinematics.
//!
//! Rotations act on column vectors and map body-frame vectors into the
//! reference frame. The baton points along body +y; its tip sits one baton
//! length from the palm after rotating by the sensor orientation expressed
//! relative to the calibrated control orientation.

mod kinematics;
pub mod quaternion;
pub mod rotation;
mod vec3;

pub use kinematics::{
    baton_tip_position, relative_rotation, BatonSpec, ControlFrame, DEFAULT_BATON_LENGTH_M,
    MAX_BATON_LENGTH_M, MIN_BATON_LENGTH_M,
};
pub use quaternion::Quaternion;
pub use rotation::{
    average_rotations, left_divide, left_divide_vec, project_to_so3, quat_to_rotation, Mat3,
    RotationMatrix,
};
pub use vec3::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("quaternion norm {norm} is too far from 1")]
    NonUnitQuaternion { norm: f64 },
    #[error("matrix is not a rotation (|RᵀR - I| = {orthogonality_error:e}, det = {determinant})")]
    NotARotation {
        orthogonality_error: f64,
        determinant: f64,
    },
    #[error("matrix is degenerate (smallest singular value {smallest_singular_value:e})")]
    DegenerateMatrix { smallest_singular_value: f64 },
    #[error("linear system is singular or ill-conditioned (condition number {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("rotation samples spread {degrees:.1} degrees apart; calibration session looks bad")]
    ExcessiveSpread { degrees: f64 },
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("baton length {0} m outside [0.05, 1.0]")]
    InvalidBatonLength(f64),
}
