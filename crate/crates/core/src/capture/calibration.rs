use crate::fusion::{FilterState, FusionError, ImuSample};
use crate::geometry::{average_rotations, quat_to_rotation, ControlFrame, GeometryError};

/// Fewest samples accepted for a control pose.
pub const MIN_CALIBRATION_SAMPLES: usize = 10;
/// Body-rate magnitude above which the baton is not considered still, rad/s.
pub const MAX_CALIBRATION_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("calibration needs at least {MIN_CALIBRATION_SAMPLES} samples, got {count}")]
    TooFewSamples { count: usize },
    #[error("baton moved during calibration (sample {index}: {rate:.3} rad/s)")]
    MotionDuringCalibration { index: usize, rate: f64 },
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Control orientation `R0` from a still capture of the baton pointing up.
///
/// The filter starts from the first sample's gravity direction and runs over
/// the rest; the fused orientations are then averaged.
pub fn calibrate_control(samples: &[ImuSample<f64>], tilt_gain: f64) -> Result<ControlFrame<f64>, CalibrationError> {
    if samples.len() < MIN_CALIBRATION_SAMPLES {
        return Err(CalibrationError::TooFewSamples { count: samples.len() });
    }
    for (index, s) in samples.iter().enumerate() {
        s.validate()?;
        let rate = s.gyro.norm();
        if rate >= MAX_CALIBRATION_RATE {
            return Err(CalibrationError::MotionDuringCalibration { index, rate });
        }
    }
    let mut state = FilterState::from_gravity(samples[0].accel, samples[0].t, tilt_gain)?;
    let mut rotations = Vec::with_capacity(samples.len());
    rotations.push(quat_to_rotation(&state.orientation())?);
    for s in &samples[1..] {
        let q = state.step(s)?;
        rotations.push(quat_to_rotation(&q)?);
    }
    let r0 = average_rotations(&rotations)?;
    Ok(ControlFrame::new(r0, samples.len())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::synth::static_imu;
    use crate::geometry::{RotationMatrix, Vec3};

    #[test]
    fn static_tilt_recovered() {
        let r = RotationMatrix::about_x(0.3);
        let samples = static_imu(&r, 100.0, 50, 0.0);
        let c = calibrate_control(&samples, 0.02).unwrap();
        assert!(c.r0.angle_to(&r) < 1e-9);
        assert_eq!(c.sample_count, 50);
    }

    #[test]
    fn motion_rejected() {
        let mut samples = static_imu(&RotationMatrix::identity(), 100.0, 20, 0.0);
        samples[7].gyro = Vec3::new(0.0, 0.2, 0.0);
        assert_eq!(
            calibrate_control(&samples, 0.02),
            Err(CalibrationError::MotionDuringCalibration { index: 7, rate: 0.2 })
        );
    }

    #[test]
    fn too_few() {
        let samples = static_imu(&RotationMatrix::identity(), 100.0, 9, 0.0);
        assert_eq!(
            calibrate_control(&samples, 0.02),
            Err(CalibrationError::TooFewSamples { count: 9 })
        );
    }
}
