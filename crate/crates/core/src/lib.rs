//! # baton-core
//!
//! Reconstruction and analysis of conducting-baton motion.
//!
//! A wrist-mounted IMU gives the baton's orientation, a hand tracker gives
//! the palm position, and forward kinematics places the baton tip. Captured
//! tip paths are cut into bars by tempo, resampled to a fixed point count,
//! aligned on the downbeat and averaged into per-technique references. A new
//! bar is then rigidly registered onto each reference and labeled with the
//! closest one.
//!
//! ```
//! use baton_core::capture::{generate_synthetic, PerturbationSpec};
//! use baton_core::movement::MovementClass;
//! use baton_core::pipeline::{average_sequences, bars_from_sequence, DownbeatAnchor};
//! use baton_core::analysis::classify_extraneous;
//!
//! let refs: Vec<_> = [MovementClass::Control, MovementClass::Knee]
//!     .into_iter()
//!     .map(|c| {
//!         let spec = PerturbationSpec::default_for(c, 7, 76.0, 4);
//!         let seq = generate_synthetic(4, 76.0, 2, &spec).unwrap();
//!         average_sequences(&[seq], c, 256).unwrap()
//!     })
//!     .collect();
//!
//! let spec = PerturbationSpec::default_for(MovementClass::Knee, 99, 76.0, 4);
//! let seq = generate_synthetic(4, 76.0, 1, &spec).unwrap();
//! let bar = &bars_from_sequence(&seq, 256, DownbeatAnchor::Auto).unwrap()[0];
//! assert_eq!(classify_extraneous(bar, &refs).unwrap().chosen(), MovementClass::Knee);
//! ```
//!
//! ## Conventions
//!
//! World frame is Y-up, meters, seconds. Rotation matrices act on column
//! vectors and map body coordinates to world coordinates. The baton lies
//! along body +Y. Numeric modules are generic over [`scalar::Real`] (`f32`
//! or `f64`); file formats and the live service use `f64`.

pub mod analysis;
pub mod capture;
pub mod fusion;
pub mod geometry;
pub mod movement;
pub mod pipeline;
pub mod scalar;

pub use movement::MovementClass;
pub use scalar::Real;

pub type Vec3d = geometry::Vec3<f64>;
pub type Quatd = geometry::Quaternion<f64>;
pub type Rotation = geometry::RotationMatrix<f64>;

pub type Vec3f = geometry::Vec3<f32>;
pub type Quatf = geometry::Quaternion<f32>;
pub type Rotationf = geometry::RotationMatrix<f32>;

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Fusion(#[from] fusion::FusionError),
    #[error(transparent)]
    Pipeline(#[from] pipeline::PipelineError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Calibration(#[from] capture::CalibrationError),
    #[error(transparent)]
    Config(#[from] capture::ConfigError),
    #[error(transparent)]
    Synth(#[from] capture::synth::InvalidSpec),
    #[error(transparent)]
    Source(#[from] capture::SourceError),
    #[error(transparent)]
    Session(#[from] capture::SessionError),
    #[error(transparent)]
    Service(#[from] capture::ServiceError),
    #[error(transparent)]
    Live(#[from] capture::LiveError),
}

impl Error {
    /// True when the input was rejected, as opposed to an operation failing.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Pipeline(pipeline::PipelineError::Io(_))
                | Error::Config(capture::ConfigError::Io(_))
                | Error::Source(capture::SourceError::Io(_) | capture::SourceError::Disconnected(_))
                | Error::Session(capture::SessionError::Io(_))
                | Error::Service(capture::ServiceError::Source(
                    capture::SourceError::Io(_) | capture::SourceError::Disconnected(_)
                ))
        )
    }
}
