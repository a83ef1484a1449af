//! Accelerometer + gyroscope orientation fusion and trailing-window smoothing.
//!
//! The filter is complementary: body rates are integrated exactly over each
//! sample interval, then a fraction `tilt_gain` of the remaining tilt error
//! (the angle between the measured specific force and world +Y) is removed.
//! Yaw is unobservable from the accelerometer and follows the gyro alone.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, Quaternion, RotationMatrix, Vec3};
use crate::scalar::Real;

/// Specific force magnitude at rest, m/s².
pub const GRAVITY: f64 = 9.81;
/// Accelerometer range sanity bound: 16 g.
pub const MAX_ACCEL: f64 = 16.0 * GRAVITY;
/// Gyroscope range sanity bound, rad/s.
pub const MAX_GYRO: f64 = 35.0;
/// Largest sample gap the filter integrates across, seconds.
pub const MAX_STEP_DT: f64 = 0.1;
/// Default per-step correction fraction at the nominal 100 Hz rate.
pub const DEFAULT_TILT_GAIN: f64 = 0.02;
pub const DEFAULT_SMOOTHING_WIDTH: usize = 5;
/// Within this distance of 1 g the accelerometer is fully trusted, m/s².
pub const ACCEL_TRUST_BAND: f64 = 2.0;
/// Beyond the trust band the gain fades linearly to zero over this span, m/s².
pub const ACCEL_TRUST_FADE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("sample time {t} does not advance past {last_t}")]
    NonMonotonicTime { t: f64, last_t: f64 },
    #[error("gap of {dt} s between samples exceeds {MAX_STEP_DT} s; reset the filter")]
    ExcessiveGap { dt: f64 },
    #[error("sample out of sensor range: {0}")]
    InvalidSample(&'static str),
    #[error("tilt gain {0} outside [0, 1]")]
    InvalidGain(f64),
    #[error("smoothing width must be at least 1")]
    ZeroWidth,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<FusionError>,
    },
}

/// One accelerometer + gyroscope reading in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ImuSample<T: Real> {
    /// Seconds on the receive-side monotonic clock.
    pub t: T,
    /// m/s²
    pub accel: Vec3<T>,
    /// rad/s
    pub gyro: Vec3<T>,
}

impl<T: Real> ImuSample<T> {
    pub fn new(t: T, accel: Vec3<T>, gyro: Vec3<T>) -> Self {
        Self { t, accel, gyro }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !self.t.is_finite() {
            return Err(FusionError::InvalidSample("non-finite timestamp"));
        }
        if !self.accel.is_finite() || !(self.accel.norm() <= T::lit(MAX_ACCEL)) {
            return Err(FusionError::InvalidSample("accelerometer beyond 16 g"));
        }
        if !self.gyro.is_finite() || !(self.gyro.norm() <= T::lit(MAX_GYRO)) {
            return Err(FusionError::InvalidSample("gyroscope beyond 35 rad/s"));
        }
        Ok(())
    }
}

/// Running estimate of body→world orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct FilterState<T: Real> {
    q: Quaternion<T>,
    last_t: T,
    tilt_gain: T,
}

impl<T: Real> FilterState<T> {
    pub fn new(q: Quaternion<T>, last_t: T, tilt_gain: T) -> Result<Self, FusionError> {
        if !(tilt_gain >= T::zero() && tilt_gain <= T::one()) {
            return Err(FusionError::InvalidGain(tilt_gain.to_f64_lossy()));
        }
        Ok(Self {
            q: q.normalized()?,
            last_t,
            tilt_gain,
        })
    }

    /// Tilt taken from a single accelerometer reading, zero yaw.
    pub fn from_gravity(accel: Vec3<T>, t: T, tilt_gain: T) -> Result<Self, FusionError> {
        let r = RotationMatrix::between(accel, Vec3::unit_y())?;
        Self::new(r.to_quaternion(), t, tilt_gain)
    }

    pub fn orientation(&self) -> Quaternion<T> {
        self.q
    }

    pub fn last_t(&self) -> T {
        self.last_t
    }

    pub fn tilt_gain(&self) -> T {
        self.tilt_gain
    }

    /// Advances the estimate by one sample.
    pub fn step(&mut self, sample: &ImuSample<T>) -> Result<Quaternion<T>, FusionError> {
        sample.validate()?;
        let dt = sample.t - self.last_t;
        if !(dt > T::zero()) {
            return Err(FusionError::NonMonotonicTime {
                t: sample.t.to_f64_lossy(),
                last_t: self.last_t.to_f64_lossy(),
            });
        }
        if dt > T::lit(MAX_STEP_DT) {
            return Err(FusionError::ExcessiveGap {
                dt: dt.to_f64_lossy(),
            });
        }

        // body rates: right-multiply by the incremental rotation
        let mut q = self.q * Quaternion::from_rotation_vector(sample.gyro * dt);

        let gain = self.tilt_gain * accel_trust(sample.accel.norm());
        if gain > T::zero() {
            if let Some(up_body) = sample.accel.normalized() {
                let up_world = q.rotate(up_body);
                let axis = up_world.cross(&Vec3::unit_y());
                let s = axis.norm();
                if s > T::EPS {
                    let err = s.atan2(up_world.y);
                    let fix = Quaternion::from_rotation_vector(axis * (gain * err / s));
                    q = fix * q;
                }
            }
        }

        self.q = q.renormalized();
        self.last_t = sample.t;
        Ok(self.q)
    }
}

/// Fraction of the tilt gain applied for a given specific-force magnitude.
fn accel_trust<T: Real>(magnitude: T) -> T {
    let dev = (magnitude - T::lit(GRAVITY)).abs();
    let band = T::lit(ACCEL_TRUST_BAND);
    if dev <= band {
        return T::one();
    }
    let w = T::one() - (dev - band) / T::lit(ACCEL_TRUST_FADE);
    if w > T::zero() {
        w
    } else {
        T::zero()
    }
}

/// Pure form of [`FilterState::step`].
pub fn fuse_step<T: Real>(
    state: FilterState<T>,
    sample: &ImuSample<T>,
) -> Result<(FilterState<T>, Quaternion<T>), FusionError> {
    let mut next = state;
    let q = next.step(sample)?;
    Ok((next, q))
}

/// Folds [`fuse_step`] over a time-ordered batch.
pub fn fuse_stream<T: Real>(
    samples: &[ImuSample<T>],
    initial: FilterState<T>,
) -> Result<Vec<(T, Quaternion<T>)>, FusionError> {
    let mut state = initial;
    samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            state
                .step(s)
                .map(|q| (s.t, q))
                .map_err(|e| FusionError::AtSample {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Trailing boxcar mean over the last `width` positions.
#[derive(Debug, Clone)]
pub struct SmoothingWindow<T: Real> {
    width: usize,
    buffer: VecDeque<Vec3<T>>,
}

impl<T: Real> SmoothingWindow<T> {
    pub fn new(width: usize) -> Result<Self, FusionError> {
        if width == 0 {
            return Err(FusionError::ZeroWidth);
        }
        Ok(Self {
            width,
            buffer: VecDeque::with_capacity(width),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
    }

    /// Samples currently in the window, oldest first.
    pub fn contents(&self) -> impl Iterator<Item = &Vec3<T>> {
        self.buffer.iter()
    }

    /// Pushes a sample and returns the mean of the window contents.
    pub fn push(&mut self, v: Vec3<T>) -> Vec3<T> {
        if self.buffer.len() == self.width {
            self.buffer.pop_front();
        }
        self.buffer.push_back(v);
        Vec3::mean(&self.buffer).expect("window holds at least the pushed sample")
    }
}

pub fn smooth_sliding_window<T: Real>(
    stream: &[Vec3<T>],
    width: usize,
) -> Result<Vec<Vec3<T>>, FusionError> {
    let mut w = SmoothingWindow::new(width)?;
    Ok(stream.iter().map(|&v| w.push(v)).collect())
}
