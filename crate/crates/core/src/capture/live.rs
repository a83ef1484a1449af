use crate::analysis::{classify_extraneous, AnalysisError};
use crate::fusion::{FilterState, FusionError, SmoothingWindow};
use crate::geometry::{
    baton_tip_position, quat_to_rotation, relative_rotation, BatonSpec, ControlFrame, GeometryError, Vec3,
};
use crate::pipeline::{
    bar_length_s, resample_bar, shift_to_downbeat, AverageTrajectory, CaptureFrame, DownbeatAnchor, RawBar,
};

use serde::{Deserialize, Serialize};

use super::config::Config;
use super::pairing::PairedSample;
use super::stream::StreamMessage;

/// Mutable state of a running [`LiveLoop`], enough to continue it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveSnapshot {
    pub filter: Option<FilterState<f64>>,
    /// Smoothing window contents, oldest first.
    pub window: Vec<Vec3<f64>>,
    pub anchor: Option<f64>,
    pub bar_index: usize,
    pub bar_frames: Vec<CaptureFrame<f64>>,
    pub processed: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("reference `{label}` has {n} points in {beats} beats; session uses {want_n} in {want_beats}")]
    ReferenceShape {
        label: String,
        n: usize,
        beats: usize,
        want_n: usize,
        want_beats: usize,
    },
    #[error("tempo cannot change once samples have been processed")]
    TempoLocked,
    #[error("invalid tempo {0}")]
    InvalidTempo(f64),
}

/// Turns paired IMU/palm samples into smoothed tip poses and, once a bar is
/// complete, a classification of that bar against the loaded references.
///
/// The filter starts from the first sample's gravity direction. Bars are
/// timed from the bar anchor, which defaults to the first sample's time.
#[derive(Debug, Clone)]
pub struct LiveLoop {
    config: Config,
    control: ControlFrame<f64>,
    baton: BatonSpec<f64>,
    filter: Option<FilterState<f64>>,
    window: SmoothingWindow<f64>,
    references: Vec<AverageTrajectory<f64>>,
    anchor: Option<f64>,
    bar_index: usize,
    bar_frames: Vec<CaptureFrame<f64>>,
    processed: usize,
}

impl LiveLoop {
    pub fn new(config: Config, control: ControlFrame<f64>) -> Result<Self, LiveError> {
        let window = SmoothingWindow::new(config.smoothing_width)?;
        Ok(Self {
            baton: BatonSpec::new(config.baton_length_m)?,
            config,
            control,
            filter: None,
            window,
            references: Vec::new(),
            anchor: None,
            bar_index: 0,
            bar_frames: Vec::new(),
            processed: 0,
        })
    }

    /// Continues a loop from a snapshot taken with [`LiveLoop::snapshot`].
    pub fn resume(config: Config, control: ControlFrame<f64>, snapshot: &LiveSnapshot) -> Result<Self, LiveError> {
        let mut live = Self::new(config, control)?;
        for &v in &snapshot.window {
            live.window.push(v);
        }
        live.filter = snapshot.filter;
        live.anchor = snapshot.anchor;
        live.bar_index = snapshot.bar_index;
        live.bar_frames = snapshot.bar_frames.clone();
        live.processed = snapshot.processed;
        Ok(live)
    }

    pub fn snapshot(&self) -> LiveSnapshot {
        LiveSnapshot {
            filter: self.filter,
            window: self.window.contents().copied().collect(),
            anchor: self.anchor,
            bar_index: self.bar_index,
            bar_frames: self.bar_frames.clone(),
            processed: self.processed,
        }
    }

    pub fn with_bar_anchor(mut self, t: f64) -> Self {
        self.anchor = Some(t);
        self
    }

    pub fn with_references(mut self, refs: Vec<AverageTrajectory<f64>>) -> Result<Self, LiveError> {
        self.set_references(refs)?;
        Ok(self)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn control(&self) -> &ControlFrame<f64> {
        &self.control
    }

    pub fn references(&self) -> &[AverageTrajectory<f64>] {
        &self.references
    }

    pub fn bar_anchor(&self) -> Option<f64> {
        self.anchor
    }

    /// Replaces the reference set; takes effect from the next completed bar.
    pub fn set_references(&mut self, refs: Vec<AverageTrajectory<f64>>) -> Result<(), LiveError> {
        for r in &refs {
            if r.n() != self.config.n_points || r.beats_per_bar() != self.config.beats_per_bar {
                return Err(LiveError::ReferenceShape {
                    label: r.label.to_string(),
                    n: r.n(),
                    beats: r.beats_per_bar(),
                    want_n: self.config.n_points,
                    want_beats: self.config.beats_per_bar,
                });
            }
        }
        self.references = refs;
        Ok(())
    }

    /// Changes the tempo; only allowed before the first sample.
    pub fn set_tempo(&mut self, tempo_bpm: f64) -> Result<(), LiveError> {
        if self.processed > 0 {
            return Err(LiveError::TempoLocked);
        }
        if !(tempo_bpm.is_finite() && tempo_bpm > 0.0) {
            return Err(LiveError::InvalidTempo(tempo_bpm));
        }
        self.config.tempo_bpm = tempo_bpm;
        Ok(())
    }

    pub fn processed(&self) -> usize {
        self.processed
    }

    /// Processes one sample, returning the messages it produces in order.
    ///
    /// A sample that does not advance time is dropped with a status message.
    /// After a gap too long to integrate across, the filter restarts from
    /// gravity and the smoothing window is cleared.
    pub fn process(&mut self, sample: &PairedSample) -> Result<Vec<StreamMessage>, LiveError> {
        let imu = &sample.imu;
        let mut out = Vec::new();
        let q = match self.filter.as_mut() {
            None => {
                let state = FilterState::from_gravity(imu.accel, imu.t, self.config.tilt_gain)?;
                self.filter = Some(state);
                state.orientation()
            }
            Some(state) => match state.step(imu) {
                Ok(q) => q,
                Err(FusionError::NonMonotonicTime { t, last_t }) => {
                    out.push(StreamMessage::status(format!(
                        "dropped sample at t={t}: not after t={last_t}"
                    )));
                    return Ok(out);
                }
                Err(FusionError::ExcessiveGap { dt }) => {
                    let fresh = FilterState::from_gravity(imu.accel, imu.t, self.config.tilt_gain)?;
                    *state = fresh;
                    self.window.clear();
                    out.push(StreamMessage::status(format!("filter restarted after a {dt:.3} s gap")));
                    fresh.orientation()
                }
                Err(e) => return Err(e.into()),
            },
        };
        self.processed += 1;

        let r = quat_to_rotation(&q)?;
        let orientation = relative_rotation(&r, &self.control)?;
        let tip = self.window.push(baton_tip_position(&orientation, sample.palm, &self.baton));
        out.push(StreamMessage::Pose {
            t: imu.t,
            palm: sample.palm,
            tip,
        });
        self.track_bar(imu.t, tip, &mut out);
        Ok(out)
    }

    fn boundary(&self, anchor: f64, k: usize) -> f64 {
        anchor + k as f64 * bar_length_s(self.config.tempo_bpm, self.config.beats_per_bar)
    }

    fn track_bar(&mut self, t: f64, tip: Vec3<f64>, out: &mut Vec<StreamMessage>) {
        let anchor = *self.anchor.get_or_insert(t);
        if t < anchor {
            return;
        }
        while t >= self.boundary(anchor, self.bar_index + 1) {
            let frames = std::mem::take(&mut self.bar_frames);
            if !self.references.is_empty() {
                out.push(self.analyze(frames, anchor));
            }
            self.bar_index += 1;
        }
        self.bar_frames.push(CaptureFrame::new(t, tip));
    }

    fn analyze(&self, frames: Vec<CaptureFrame<f64>>, anchor: f64) -> StreamMessage {
        let k = self.bar_index;
        let raw = RawBar {
            index: k,
            start_t: self.boundary(anchor, k),
            end_t: self.boundary(anchor, k + 1),
            tempo_bpm: self.config.tempo_bpm,
            beats_per_bar: self.config.beats_per_bar,
            frames,
        };
        let result = resample_bar(&raw, self.config.n_points)
            .map_err(AnalysisError::from)
            .and_then(|bar| classify_extraneous(&shift_to_downbeat(&bar, DownbeatAnchor::Auto), &self.references));
        match result {
            Ok(result) => StreamMessage::BarAnalysis { bar_index: k, result },
            Err(e) => StreamMessage::status(format!("bar {k} not analyzed: {e}")),
        }
    }
}
