use super::{CaptureFrame, CaptureSequence, PipelineError};
use crate::scalar::Real;

/// Bar duration in seconds: `beats_per_bar · 60 / tempo_bpm`.
pub fn bar_length_s<T: Real>(tempo_bpm: T, beats_per_bar: usize) -> T {
    T::from_usize(beats_per_bar).expect("beat count fits scalar") * T::lit(60.0) / tempo_bpm
}

/// Frames falling in `[start_t, end_t)` of one bar.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBar<T: Real> {
    pub index: usize,
    pub start_t: T,
    pub end_t: T,
    pub tempo_bpm: T,
    pub beats_per_bar: usize,
    pub frames: Vec<CaptureFrame<T>>,
}

/// Splits a sequence into consecutive bars of fixed duration.
///
/// Bar `k` covers `[anchor + k·L, anchor + (k+1)·L)`. A bar counts as
/// complete once the capture reaches its end time; the trailing partial bar
/// and frames before the anchor are dropped.
pub fn segment_bars<T: Real>(seq: &CaptureSequence<T>) -> Result<Vec<RawBar<T>>, PipelineError> {
    let frames = seq.frames();
    let (first, last) = match (frames.first(), frames.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(PipelineError::EmptySequence),
    };
    let meta = &seq.meta;
    meta.validate()?;
    let len = bar_length_s(meta.tempo_bpm, meta.beats_per_bar);
    let anchor = meta.start_anchor_t.unwrap_or(first.t);
    let boundary = |k: usize| anchor + T::from_usize(k).expect("bar index fits scalar") * len;

    let span = last.t - anchor;
    if !(span >= len) {
        return Err(PipelineError::NoCompleteBar);
    }
    let mut complete = (span / len).floor().to_f64_lossy() as usize;
    while boundary(complete + 1) <= last.t {
        complete += 1;
    }
    while complete > 0 && boundary(complete) > last.t {
        complete -= 1;
    }
    if complete == 0 {
        return Err(PipelineError::NoCompleteBar);
    }

    let mut bars: Vec<RawBar<T>> = (0..complete)
        .map(|k| RawBar {
            index: k,
            start_t: boundary(k),
            end_t: boundary(k + 1),
            tempo_bpm: meta.tempo_bpm,
            beats_per_bar: meta.beats_per_bar,
            frames: Vec::new(),
        })
        .collect();

    let mut k = 0;
    for f in frames.iter().filter(|f| f.t >= anchor) {
        while k < complete && f.t >= bars[k].end_t {
            k += 1;
        }
        if k == complete {
            break;
        }
        bars[k].frames.push(*f);
    }
    Ok(bars)
}
