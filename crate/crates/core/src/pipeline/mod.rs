//! Captured tip positions to per-class average trajectories: bar
//! segmentation by tempo, fixed-count resampling, downbeat alignment and
//! point-to-point averaging.

mod average;
mod bar;
mod capture;
pub mod csv_io;
mod resample;
mod segment;

pub use average::{average_bars, AverageTrajectory};
pub use bar::{beat_slices, detect_downbeat, shift_to_downbeat, BarSegment, DownbeatAnchor};
pub use capture::{CaptureFrame, CaptureSequence, SequenceMeta};
pub use csv_io::{import_capture_csv, read_capture_csv, write_capture_csv, LengthUnit};
pub use resample::resample_bar;
pub use segment::{bar_length_s, segment_bars, RawBar};

use crate::movement::MovementClass;
use crate::scalar::Real;

/// Nominal tempo of the recorded corpus, beats per minute.
pub const DEFAULT_TEMPO_BPM: f64 = 76.0;
pub const DEFAULT_BEATS_PER_BAR: usize = 4;
/// Points per resampled bar.
pub const DEFAULT_N_POINTS: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: timestamp does not increase")]
    NonMonotonicTimestamps { row: usize },
    #[error("unknown length unit `{0}` (expected m or mm)")]
    UnknownUnit(String),
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("sequence does not span a complete bar")]
    NoCompleteBar,
    #[error("bar has {count} frames, need at least 2")]
    TooFewFrames { count: usize },
    #[error("point count {n} must be a positive multiple of {beats_per_bar} beats")]
    InvalidN { n: usize, beats_per_bar: usize },
    #[error("{n} points cannot be split into {beats_per_bar} equal beats")]
    IndivisibleN { n: usize, beats_per_bar: usize },
    #[error("no bars to average")]
    EmptyInput,
    #[error("bars differ in point count, tempo or meter")]
    MixedShapes,
    #[error("invalid sequence metadata: {0}")]
    InvalidMeta(&'static str),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("average trajectory file: {0}")]
    InvalidAverage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Segment, resample and downbeat-align every complete bar of a sequence.
pub fn bars_from_sequence<T: Real>(
    seq: &CaptureSequence<T>,
    n_points: usize,
    anchor: DownbeatAnchor,
) -> Result<Vec<BarSegment<T>>, PipelineError> {
    segment_bars(seq)?
        .iter()
        .map(|raw| resample_bar(raw, n_points).map(|b| shift_to_downbeat(&b, anchor)))
        .collect()
}

/// Average of every complete bar of every sequence, in sequence then bar order.
pub fn average_sequences<T: Real>(
    seqs: &[CaptureSequence<T>],
    label: MovementClass,
    n_points: usize,
) -> Result<AverageTrajectory<T>, PipelineError> {
    let mut bars = Vec::new();
    for s in seqs {
        bars.extend(bars_from_sequence(s, n_points, DownbeatAnchor::Auto)?);
    }
    average_bars(&bars, label)
}
