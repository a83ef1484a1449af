use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{pointwise_deviation, rigid_register, AnalysisError, DeviationProfile, RigidTransform};
use crate::movement::MovementClass;
use crate::pipeline::{AverageTrajectory, BarSegment};
use crate::scalar::Real;

/// Which circular shifts of the bar are tried before registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftSearch {
    /// Every beat-aligned shift `k·N/b`, `k < b`. Absorbs a downbeat
    /// detected on the wrong beat.
    #[default]
    BeatAligned,
    /// Trust the bar's anchor; shift 0 only.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<T: Real> {
    pub transform: RigidTransform<T>,
    pub profile: DeviationProfile<T>,
    /// Points the bar was rotated left by before registration.
    pub shift: usize,
}

pub fn compare_to_reference<T: Real>(
    bar: &BarSegment<T>,
    reference: &AverageTrajectory<T>,
) -> Result<Comparison<T>, AnalysisError> {
    compare_with(bar, reference, ShiftSearch::BeatAligned)
}

/// Registers the bar (at each candidate shift) onto the reference and keeps
/// the lowest mean deviation; ties go to the smaller shift.
pub fn compare_with<T: Real>(
    bar: &BarSegment<T>,
    reference: &AverageTrajectory<T>,
    search: ShiftSearch,
) -> Result<Comparison<T>, AnalysisError> {
    if bar.n() != reference.n() || bar.beats_per_bar() != reference.beats_per_bar() {
        return Err(AnalysisError::ShapeMismatch(format!(
            "bar has {} points in {} beats, reference `{}` has {} points in {} beats",
            bar.n(),
            bar.beats_per_bar(),
            reference.label,
            reference.n(),
            reference.beats_per_bar()
        )));
    }
    let b = bar.beats_per_bar();
    let per_beat = bar.n() / b;
    let shifts: Vec<usize> = match search {
        ShiftSearch::BeatAligned => (0..b).map(|k| k * per_beat).collect(),
        ShiftSearch::Fixed => vec![0],
    };

    let mut best: Option<Comparison<T>> = None;
    for shift in shifts {
        let shifted = bar.rotated(shift);
        let reg = rigid_register(shifted.points(), reference.points())?;
        let profile = pointwise_deviation(&reg.aligned, reference.points(), b)?;
        if best.as_ref().is_none_or(|c| profile.mean_m < c.profile.mean_m) {
            best = Some(Comparison {
                transform: reg.transform,
                profile,
                shift,
            });
        }
    }
    Ok(best.expect("at least one shift candidate"))
}

/// One reference's standing in a classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RankedClass<T: Real> {
    pub label: MovementClass,
    pub mean_m: T,
    pub max_m: T,
    pub per_beat_m: Vec<T>,
    #[serde(skip)]
    pub shift: usize,
}

/// References ranked by ascending mean deviation from a bar.
///
/// Serializes as `{ranking: [{label, mean_m, max_m, per_beat_m}], chosen, shift_used}`
/// where `shift_used[i]` is the circular shift applied for `ranking[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
#[serde(into = "ResultWire<T>", from = "ResultWire<T>")]
pub struct ClassificationResult<T: Real> {
    pub ranking: Vec<RankedClass<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct ResultWire<T: Real> {
    ranking: Vec<RankedClass<T>>,
    chosen: Option<MovementClass>,
    shift_used: Vec<usize>,
}

impl<T: Real> From<ClassificationResult<T>> for ResultWire<T> {
    fn from(r: ClassificationResult<T>) -> Self {
        Self {
            chosen: r.ranking.first().map(|c| c.label),
            shift_used: r.ranking.iter().map(|c| c.shift).collect(),
            ranking: r.ranking,
        }
    }
}

impl<T: Real> From<ResultWire<T>> for ClassificationResult<T> {
    fn from(w: ResultWire<T>) -> Self {
        let mut ranking = w.ranking;
        for (c, s) in ranking.iter_mut().zip(w.shift_used) {
            c.shift = s;
        }
        Self { ranking }
    }
}

impl<T: Real> ClassificationResult<T> {
    pub fn chosen(&self) -> MovementClass {
        self.ranking[0].label
    }

    pub fn best(&self) -> &RankedClass<T> {
        &self.ranking[0]
    }

    pub fn deviation_of(&self, label: MovementClass) -> Option<T> {
        self.ranking.iter().find(|c| c.label == label).map(|c| c.mean_m)
    }
}

pub fn classify_extraneous<T: Real>(
    bar: &BarSegment<T>,
    refs: &[AverageTrajectory<T>],
) -> Result<ClassificationResult<T>, AnalysisError> {
    classify_with(bar, refs, ShiftSearch::BeatAligned)
}

/// Compares the bar with every reference and ranks them; ties keep the
/// movement-class declaration order.
pub fn classify_with<T: Real>(
    bar: &BarSegment<T>,
    refs: &[AverageTrajectory<T>],
    search: ShiftSearch,
) -> Result<ClassificationResult<T>, AnalysisError> {
    if refs.is_empty() {
        return Err(AnalysisError::NoReferences);
    }
    let mut ordered: Vec<&AverageTrajectory<T>> = refs.iter().collect();
    ordered.sort_by_key(|r| r.label);
    if let Some(w) = ordered.windows(2).find(|w| w[0].label == w[1].label) {
        return Err(AnalysisError::DuplicateReference(w[0].label));
    }

    let mut ranking = ordered
        .into_iter()
        .map(|r| {
            compare_with(bar, r, search).map(|c| RankedClass {
                label: r.label,
                mean_m: c.profile.mean_m,
                max_m: c.profile.max_m,
                per_beat_m: c.profile.per_beat_mean_m,
                shift: c.shift,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    // stable: equal deviations stay in class order
    ranking.sort_by(|a, b| a.mean_m.partial_cmp(&b.mean_m).unwrap_or(Ordering::Equal));
    Ok(ClassificationResult { ranking })
}

/// Classification of one identified bar, as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub bar_id: String,
    #[serde(flatten)]
    pub result: ClassificationResult<f64>,
}
