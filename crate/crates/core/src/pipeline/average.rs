use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BarSegment, PipelineError};
use crate::geometry::Vec3;
use crate::movement::MovementClass;
use crate::scalar::Real;

/// Point-to-point mean path of one movement class.
///
/// JSON form: `{label, n, tempo_bpm, beats_per_bar, points: [[x,y,z],…], sample_bars}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
#[serde(into = "AverageFile<T>", try_from = "AverageFile<T>")]
pub struct AverageTrajectory<T: Real> {
    pub label: MovementClass,
    points: Vec<Vec3<T>>,
    tempo_bpm: T,
    beats_per_bar: usize,
    sample_bars: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct AverageFile<T: Real> {
    label: MovementClass,
    n: usize,
    tempo_bpm: T,
    beats_per_bar: usize,
    points: Vec<Vec3<T>>,
    sample_bars: usize,
}

impl<T: Real> From<AverageTrajectory<T>> for AverageFile<T> {
    fn from(a: AverageTrajectory<T>) -> Self {
        Self {
            label: a.label,
            n: a.points.len(),
            tempo_bpm: a.tempo_bpm,
            beats_per_bar: a.beats_per_bar,
            points: a.points,
            sample_bars: a.sample_bars,
        }
    }
}

impl<T: Real> TryFrom<AverageFile<T>> for AverageTrajectory<T> {
    type Error = PipelineError;
    fn try_from(f: AverageFile<T>) -> Result<Self, Self::Error> {
        if f.n != f.points.len() {
            return Err(PipelineError::InvalidAverage(format!(
                "n = {} but {} points listed",
                f.n,
                f.points.len()
            )));
        }
        AverageTrajectory::new(f.label, f.points, f.tempo_bpm, f.beats_per_bar, f.sample_bars)
    }
}

impl<T: Real> AverageTrajectory<T> {
    pub fn new(
        label: MovementClass,
        points: Vec<Vec3<T>>,
        tempo_bpm: T,
        beats_per_bar: usize,
        sample_bars: usize,
    ) -> Result<Self, PipelineError> {
        if sample_bars == 0 {
            return Err(PipelineError::InvalidAverage("sample_bars must be at least 1".into()));
        }
        // reuse the bar invariants
        let bar = BarSegment::new(points, tempo_bpm, beats_per_bar, 0)?;
        Ok(Self {
            label,
            points: bar.points().to_vec(),
            tempo_bpm,
            beats_per_bar,
            sample_bars,
        })
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn tempo_bpm(&self) -> T {
        self.tempo_bpm
    }

    pub fn beats_per_bar(&self) -> usize {
        self.beats_per_bar
    }

    pub fn sample_bars(&self) -> usize {
        self.sample_bars
    }

    /// The average viewed as a bar, e.g. to classify it against the others.
    pub fn as_bar(&self) -> BarSegment<T> {
        BarSegment::new(self.points.clone(), self.tempo_bpm, self.beats_per_bar, 0)
            .expect("average upholds bar invariants")
    }
}

impl AverageTrajectory<f64> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("average serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(s).map_err(|e| PipelineError::InvalidAverage(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let mut s = self.to_json();
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Point-to-point arithmetic mean, summed in bar order.
pub fn average_bars<T: Real>(
    bars: &[BarSegment<T>],
    label: MovementClass,
) -> Result<AverageTrajectory<T>, PipelineError> {
    let first = bars.first().ok_or(PipelineError::EmptyInput)?;
    let same_shape = |b: &BarSegment<T>| {
        b.n() == first.n()
            && b.tempo_bpm() == first.tempo_bpm()
            && b.beats_per_bar() == first.beats_per_bar()
    };
    if !bars.iter().all(same_shape) {
        return Err(PipelineError::MixedShapes);
    }
    let count = T::from_usize(bars.len()).expect("bar count fits scalar");
    let points = (0..first.n())
        .map(|i| {
            let mut acc = Vec3::zero();
            for b in bars {
                acc += b.points()[i];
            }
            acc / count
        })
        .collect();
    AverageTrajectory::new(label, points, first.tempo_bpm(), first.beats_per_bar(), bars.len())
}
