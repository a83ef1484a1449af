use serde::{Deserialize, Serialize};

use crate::fusion::ImuSample;
use crate::geometry::Vec3;
use crate::pipeline::CaptureFrame;

/// Palm position reported by the hand tracker.
pub type PalmSample<T> = CaptureFrame<T>;

/// An IMU reading with the palm position in effect at its timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub imu: ImuSample<f64>,
    pub palm: Vec3<f64>,
    /// Timestamp of the palm sample that was held.
    pub palm_t: f64,
}

/// Zero-order hold of the palm stream onto IMU timestamps.
///
/// Each IMU sample pairs with the latest palm sample at or before its time.
/// IMU samples earlier than the first palm sample are dropped. Both inputs
/// must be time-ordered.
pub fn pair_streams(imu: &[ImuSample<f64>], palm: &[PalmSample<f64>]) -> Vec<PairedSample> {
    let mut out = Vec::with_capacity(imu.len());
    let mut j = 0;
    let mut held: Option<&PalmSample<f64>> = None;
    for s in imu {
        while j < palm.len() && palm[j].t <= s.t {
            held = Some(&palm[j]);
            j += 1;
        }
        if let Some(p) = held {
            out.push(PairedSample {
                imu: *s,
                palm: p.pos,
                palm_t: p.t,
            });
        }
    }
    out
}

/// Incremental form of [`pair_streams`] for interleaved live events.
#[derive(Debug, Clone, Default)]
pub struct Pairer {
    held: Option<PalmSample<f64>>,
}

impl Pairer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resumes with a palm sample already held.
    pub fn with_held(held: Option<PalmSample<f64>>) -> Self {
        Self { held }
    }

    pub fn held(&self) -> Option<PalmSample<f64>> {
        self.held
    }

    /// Records a palm sample. One older than the held sample is ignored.
    pub fn push_palm(&mut self, p: PalmSample<f64>) {
        match self.held {
            Some(h) if p.t < h.t => {}
            _ => self.held = Some(p),
        }
    }

    /// Pairs an IMU sample, or `None` while no palm sample has arrived.
    pub fn push_imu(&mut self, s: ImuSample<f64>) -> Option<PairedSample> {
        self.held.filter(|p| p.t <= s.t).map(|p| PairedSample {
            imu: s,
            palm: p.pos,
            palm_t: p.t,
        })
    }
}
