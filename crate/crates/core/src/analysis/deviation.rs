use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::geometry::Vec3;
use crate::pipeline::beat_slices;
use crate::scalar::Real;

/// Point-to-point distances between an aligned path and its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct DeviationProfile<T: Real> {
    pub per_point: Vec<T>,
    pub mean_m: T,
    pub max_m: T,
    pub per_beat_mean_m: Vec<T>,
}

fn mean<T: Real>(v: &[T]) -> T {
    let sum = v.iter().fold(T::zero(), |a, &b| a + b);
    sum / T::from_usize(v.len()).expect("count fits scalar")
}

pub fn pointwise_deviation<T: Real>(
    aligned: &[Vec3<T>],
    target: &[Vec3<T>],
    beats_per_bar: usize,
) -> Result<DeviationProfile<T>, AnalysisError> {
    if aligned.len() != target.len() || aligned.is_empty() {
        return Err(AnalysisError::ShapeMismatch(format!(
            "{} aligned points vs {} target points",
            aligned.len(),
            target.len()
        )));
    }
    let slices = beat_slices(aligned.len(), beats_per_bar)?;
    let per_point: Vec<T> = aligned.iter().zip(target).map(|(a, t)| a.distance(t)).collect();
    let max_m = per_point
        .iter()
        .fold(T::zero(), |m, &d| if d > m { d } else { m });
    Ok(DeviationProfile {
        mean_m: mean(&per_point),
        max_m,
        per_beat_mean_m: slices.into_iter().map(|r| mean(&per_point[r])).collect(),
        per_point,
    })
}
