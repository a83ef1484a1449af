use serde::{Deserialize, Serialize};

use super::{left_divide, project_to_so3, GeometryError, RotationMatrix, Vec3};
use crate::scalar::Real;

pub const DEFAULT_BATON_LENGTH_M: f64 = 0.35;
pub const MIN_BATON_LENGTH_M: f64 = 0.05;
pub const MAX_BATON_LENGTH_M: f64 = 1.0;

/// Calibration rotation relating the orientation sensor's frame to the
/// tracker axes, measured while both were physically aligned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
#[serde(try_from = "RawControlFrame<T>")]
pub struct ControlFrame<T: Real> {
    pub r0: RotationMatrix<T>,
    pub sample_count: usize,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
struct RawControlFrame<T: Real> {
    r0: RotationMatrix<T>,
    sample_count: usize,
}

impl<T: Real> TryFrom<RawControlFrame<T>> for ControlFrame<T> {
    type Error = GeometryError;
    fn try_from(raw: RawControlFrame<T>) -> Result<Self, Self::Error> {
        Self::new(raw.r0, raw.sample_count)
    }
}

impl<T: Real> ControlFrame<T> {
    pub fn new(r0: RotationMatrix<T>, sample_count: usize) -> Result<Self, GeometryError> {
        if sample_count == 0 {
            return Err(GeometryError::EmptyInput);
        }
        Ok(Self { r0, sample_count })
    }

    /// Frame for a sensor mounted exactly along the tracker axes.
    pub fn identity() -> Self {
        Self {
            r0: RotationMatrix::identity(),
            sample_count: 1,
        }
    }
}

/// Baton geometry: the tip sits `length_m` along the sensor's +Y axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
#[serde(try_from = "RawBaton<T>")]
pub struct BatonSpec<T: Real> {
    length_m: T,
}

#[derive(Deserialize)]
struct RawBaton<T> {
    length_m: T,
}

impl<T: Real> TryFrom<RawBaton<T>> for BatonSpec<T> {
    type Error = GeometryError;
    fn try_from(raw: RawBaton<T>) -> Result<Self, Self::Error> {
        Self::new(raw.length_m)
    }
}

impl<T: Real> BatonSpec<T> {
    pub fn new(length_m: T) -> Result<Self, GeometryError> {
        let lo = T::lit(MIN_BATON_LENGTH_M);
        let hi = T::lit(MAX_BATON_LENGTH_M);
        if !(length_m >= lo && length_m <= hi) {
            return Err(GeometryError::InvalidBatonLength(length_m.to_f64_lossy()));
        }
        Ok(Self { length_m })
    }

    pub fn length_m(&self) -> T {
        self.length_m
    }
}

impl<T: Real> Default for BatonSpec<T> {
    fn default() -> Self {
        Self {
            length_m: T::lit(DEFAULT_BATON_LENGTH_M),
        }
    }
}

/// Orientation of `raw` relative to the control frame (`control⁻¹ · raw`
/// solved without an explicit inverse), re-projected onto SO(3).
pub fn relative_rotation<T: Real>(
    raw: &RotationMatrix<T>,
    control: &ControlFrame<T>,
) -> Result<RotationMatrix<T>, GeometryError> {
    let x = left_divide(control.r0.matrix(), raw.matrix())?;
    project_to_so3(&x)
}

/// Baton tip: palm position plus the body +y axis, scaled to the baton
/// length and rotated by `orientation`.
pub fn baton_tip_position<T: Real>(
    orientation: &RotationMatrix<T>,
    palm: Vec3<T>,
    baton: &BatonSpec<T>,
) -> Vec3<T> {
    palm + orientation.apply(Vec3::unit_y() * baton.length_m)
}
