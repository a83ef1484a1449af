use super::{BarSegment, PipelineError, RawBar};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// Resamples a raw bar to `n` points by piecewise-linear interpolation at
/// `n` uniformly spaced instants from the bar's first to its last frame.
pub fn resample_bar<T: Real>(raw: &RawBar<T>, n: usize) -> Result<BarSegment<T>, PipelineError> {
    let frames = &raw.frames;
    if frames.len() < 2 {
        return Err(PipelineError::TooFewFrames { count: frames.len() });
    }
    let b = raw.beats_per_bar;
    if n < 2 || b == 0 || n < b || !n.is_multiple_of(b) {
        return Err(PipelineError::InvalidN { n, beats_per_bar: b });
    }

    let t0 = frames[0].t;
    let t1 = frames[frames.len() - 1].t;
    let step = (t1 - t0) / T::from_usize(n - 1).expect("point count fits scalar");

    let mut points: Vec<Vec3<T>> = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let t = if j == n - 1 {
            t1
        } else {
            t0 + step * T::from_usize(j).expect("index fits scalar")
        };
        while seg + 2 < frames.len() && frames[seg + 1].t <= t {
            seg += 1;
        }
        let (a, b) = (&frames[seg], &frames[seg + 1]);
        let w = (t - a.t) / (b.t - a.t);
        let w = w.clamp(T::zero(), T::one());
        points.push(a.pos.lerp(&b.pos, w));
    }
    BarSegment::new(points, raw.tempo_bpm, b, raw.index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::CaptureFrame;

    fn raw(frames: Vec<CaptureFrame<f64>>, beats: usize) -> RawBar<f64> {
        RawBar {
            index: 0,
            start_t: frames[0].t,
            end_t: frames[frames.len() - 1].t,
            tempo_bpm: 76.0,
            beats_per_bar: beats,
            frames,
        }
    }

    #[test]
    fn straight_line() {
        let bar = raw(
            vec![
                CaptureFrame::new(0.0, Vec3::new(0.0, 0.0, 0.0)),
                CaptureFrame::new(1.0, Vec3::new(1.0, 2.0, -4.0)),
            ],
            1,
        );
        let out = resample_bar(&bar, 5).unwrap();
        for (j, p) in out.points().iter().enumerate() {
            let s = j as f64 / 4.0;
            assert!((*p - Vec3::new(s, 2.0 * s, -4.0 * s)).norm() < 1e-15);
        }
    }

    #[test]
    fn too_few_frames() {
        let bar = raw(vec![CaptureFrame::new(0.0, Vec3::zero())], 4);
        assert!(matches!(resample_bar(&bar, 8), Err(PipelineError::TooFewFrames { count: 1 })));
    }

    #[test]
    fn n_must_fit_beats() {
        let bar = raw(
            vec![CaptureFrame::new(0.0, Vec3::zero()), CaptureFrame::new(1.0, Vec3::zero())],
            4,
        );
        assert!(matches!(resample_bar(&bar, 2), Err(PipelineError::InvalidN { .. })));
        assert!(matches!(resample_bar(&bar, 10), Err(PipelineError::InvalidN { .. })));
    }
}
