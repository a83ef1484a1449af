use serde::{Deserialize, Serialize};

use super::{PipelineError, DEFAULT_BEATS_PER_BAR, DEFAULT_TEMPO_BPM};
use crate::geometry::Vec3;
use crate::movement::MovementClass;
use crate::scalar::Real;

/// Time-stamped tip (or palm) position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct CaptureFrame<T: Real> {
    pub t: T,
    pub pos: Vec3<T>,
}

impl<T: Real> CaptureFrame<T> {
    pub fn new(t: T, pos: Vec3<T>) -> Self {
        Self { t, pos }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SequenceMeta<T: Real> {
    pub tempo_bpm: T,
    pub beats_per_bar: usize,
    pub label: Option<MovementClass>,
    /// Start of bar 0; the first frame's time when absent.
    pub start_anchor_t: Option<T>,
}

impl<T: Real> Default for SequenceMeta<T> {
    fn default() -> Self {
        Self {
            tempo_bpm: T::lit(DEFAULT_TEMPO_BPM),
            beats_per_bar: DEFAULT_BEATS_PER_BAR,
            label: None,
            start_anchor_t: None,
        }
    }
}

impl<T: Real> SequenceMeta<T> {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.tempo_bpm > T::zero() && self.tempo_bpm.is_finite()) {
            return Err(PipelineError::InvalidMeta("tempo must be positive"));
        }
        if self.beats_per_bar == 0 {
            return Err(PipelineError::InvalidMeta("beats per bar must be at least 1"));
        }
        if matches!(self.start_anchor_t, Some(a) if !a.is_finite()) {
            return Err(PipelineError::InvalidMeta("anchor time must be finite"));
        }
        Ok(())
    }
}

/// Strictly time-ordered frames plus the tempo context needed to cut bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct CaptureSequence<T: Real> {
    frames: Vec<CaptureFrame<T>>,
    pub meta: SequenceMeta<T>,
}

impl<T: Real> CaptureSequence<T> {
    pub fn new(frames: Vec<CaptureFrame<T>>, meta: SequenceMeta<T>) -> Result<Self, PipelineError> {
        meta.validate()?;
        for (i, f) in frames.iter().enumerate() {
            if !f.t.is_finite() || !f.pos.is_finite() {
                return Err(PipelineError::NonFinite);
            }
            if i > 0 && !(f.t > frames[i - 1].t) {
                return Err(PipelineError::NonMonotonicTimestamps { row: i });
            }
        }
        Ok(Self { frames, meta })
    }

    pub fn frames(&self) -> &[CaptureFrame<T>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<CaptureFrame<T>> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn with_meta(mut self, meta: SequenceMeta<T>) -> Result<Self, PipelineError> {
        meta.validate()?;
        self.meta = meta;
        Ok(self)
    }
}
