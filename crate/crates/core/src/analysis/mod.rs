//! Rigid registration of bars onto reference trajectories, deviation
//! profiles, and extraneous-movement classification by lowest deviation.

mod classify;
mod deviation;
mod register;

pub use classify::{
    classify_extraneous, classify_with, compare_to_reference, compare_with, ClassificationReport,
    ClassificationResult, Comparison, RankedClass, ShiftSearch,
};
pub use deviation::{pointwise_deviation, DeviationProfile};
pub use register::{rigid_register, Registration, RigidTransform};

use crate::geometry::GeometryError;
use crate::movement::MovementClass;
use crate::pipeline::PipelineError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("point set is degenerate (collinear or coincident); rotation is not unique")]
    DegenerateGeometry,
    #[error("no reference trajectories supplied")]
    NoReferences,
    #[error("more than one reference labeled `{0}`")]
    DuplicateReference(MovementClass),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}
