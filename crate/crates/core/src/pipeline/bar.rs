use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::geometry::Vec3;
use crate::scalar::Real;

/// One bar resampled to a fixed number of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BarSegment<T: Real> {
    points: Vec<Vec3<T>>,
    tempo_bpm: T,
    beats_per_bar: usize,
    source_bar_index: usize,
}

impl<T: Real> BarSegment<T> {
    pub fn new(
        points: Vec<Vec3<T>>,
        tempo_bpm: T,
        beats_per_bar: usize,
        source_bar_index: usize,
    ) -> Result<Self, PipelineError> {
        let n = points.len();
        if beats_per_bar == 0 || n == 0 || !n.is_multiple_of(beats_per_bar) {
            return Err(PipelineError::InvalidN { n, beats_per_bar });
        }
        if !(tempo_bpm > T::zero()) {
            return Err(PipelineError::InvalidMeta("tempo must be positive"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(PipelineError::NonFinite);
        }
        Ok(Self {
            points,
            tempo_bpm,
            beats_per_bar,
            source_bar_index,
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

    pub fn source_bar_index(&self) -> usize {
        self.source_bar_index
    }

    /// Same bar with its points rotated left by `k`: `out[i] = in[(i + k) mod N]`.
    pub fn rotated(&self, k: usize) -> Self {
        let mut points = self.points.clone();
        points.rotate_left(k % self.points.len());
        Self { points, ..*self }
    }

    /// Applies `f` to every point, keeping the timing metadata.
    pub fn map_points(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            ..*self
        }
    }
}

/// Where beat 1 starts inside a bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DownbeatAnchor {
    /// Lowest vertical (Y) point, earliest on ties.
    #[default]
    Auto,
    /// Caller-supplied point index (taken modulo N).
    Index(usize),
}

/// Index of the lowest point in Y, earliest on ties.
pub fn detect_downbeat<T: Real>(points: &[Vec3<T>]) -> usize {
    points
        .iter()
        .enumerate()
        .fold(None::<(usize, T)>, |best, (i, p)| match best {
            Some((_, y)) if !(p.y < y) => best,
            _ => Some((i, p.y)),
        })
        .map_or(0, |(i, _)| i)
}

/// Circularly shifts a bar so that it starts at the downbeat.
pub fn shift_to_downbeat<T: Real>(bar: &BarSegment<T>, anchor: DownbeatAnchor) -> BarSegment<T> {
    let k = match anchor {
        DownbeatAnchor::Auto => detect_downbeat(bar.points()),
        DownbeatAnchor::Index(i) => i % bar.n(),
    };
    bar.rotated(k)
}

/// Index ranges of each beat: beat `j` is `[j·N/b, (j+1)·N/b)`.
pub fn beat_slices(n: usize, beats_per_bar: usize) -> Result<Vec<Range<usize>>, PipelineError> {
    if beats_per_bar == 0 || n == 0 || !n.is_multiple_of(beats_per_bar) {
        return Err(PipelineError::IndivisibleN { n, beats_per_bar });
    }
    let per = n / beats_per_bar;
    Ok((0..beats_per_bar).map(|j| j * per..(j + 1) * per).collect())
}
