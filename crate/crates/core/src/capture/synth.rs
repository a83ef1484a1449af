//! Synthetic 4/4 conducting corpus.
//!
//! The base path is a closed piecewise-cubic (Hermite) curve through the
//! beat layout of the conventional 4/4 pattern: beat 1 straight down to the
//! lowest point, beat 2 to the inner left, beat 3 to the outer right, beat 4
//! up and back to the top. Ictus points carry zero velocity, so beat 1 is the
//! unique vertical minimum. Extraneous movements are additive perturbation
//! models of our own; they are not measured data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::fusion::{ImuSample, GRAVITY};
use crate::geometry::{BatonSpec, RotationMatrix, Vec3};
use crate::movement::MovementClass;
use crate::pipeline::{bar_length_s, CaptureFrame, CaptureSequence, SequenceMeta};

/// Default perturbation amplitude, meters.
pub const DEFAULT_AMPLITUDE_M: f64 = 0.04;
/// Default wrist jitter frequency, Hz.
pub const DEFAULT_WRIST_HZ: f64 = 5.0;
/// Default tracking noise (RMS length of the 3-D noise vector), meters.
pub const DEFAULT_NOISE_SIGMA_M: f64 = 0.002;
/// Default capture rate of generated streams, Hz.
pub const DEFAULT_RATE_HZ: f64 = 100.0;
/// Horizontal extent of the base path, meters.
pub const PATH_WIDTH_M: f64 = 0.4;
/// Vertical extent of the base path, meters.
pub const PATH_HEIGHT_M: f64 = 0.35;
/// Depth modulation amplitude of the base path, meters.
pub const PATH_DEPTH_M: f64 = 0.02;
/// World position of the beat-1 ictus.
pub const PATH_ORIGIN: [f64; 3] = [0.0, 1.1, -0.35];
/// Still period before the first downbeat in paired streams, seconds.
pub const LEAD_IN_S: f64 = 0.1;

/// Keypoints `(phase, x, y)` of one bar; even entries are the four ictuses.
const KEYPOINTS: [(f64, f64, f64); 8] = [
    (0.000, 0.00, 0.00),
    (0.125, -0.04, 0.13),
    (0.250, -0.20, 0.05),
    (0.375, -0.02, 0.12),
    (0.500, 0.20, 0.06),
    (0.625, 0.12, 0.16),
    (0.750, 0.04, 0.12),
    (0.875, 0.00, 0.35),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid synthetic spec: {0}")]
pub struct InvalidSpec(pub String);

/// Base path offset from [`PATH_ORIGIN`] at bar phase `u ∈ [0, 1)`.
pub fn base_path(u: f64) -> Vec3<f64> {
    let u = u.rem_euclid(1.0);
    let k = KEYPOINTS.len();
    let seg_len = 1.0 / k as f64;
    let i = ((u / seg_len).floor() as usize).min(k - 1);
    let s = (u - KEYPOINTS[i].0) / seg_len;

    let p = |j: usize| {
        let (_, x, y) = KEYPOINTS[j % k];
        (x, y)
    };
    let tangent = |j: usize| {
        if j.is_multiple_of(2) {
            (0.0, 0.0)
        } else {
            let (a, c, b) = (p(j + k - 1), p(j), p(j + 1));
            // flat at vertical turning points so the curve stays within the keypoints' height
            let turning = (c.1 - a.1) * (b.1 - c.1) <= 0.0;
            let dy = if turning { 0.0 } else { (b.1 - a.1) / 2.0 };
            ((b.0 - a.0) / 2.0, dy)
        }
    };
    let (p0, p1) = (p(i), p(i + 1));
    let (m0, m1) = (tangent(i), tangent(i + 1));
    let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
    let h10 = s * s * s - 2.0 * s * s + s;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    let x = h00 * p0.0 + h10 * m0.0 + h01 * p1.0 + h11 * m1.0;
    let y = h00 * p0.1 + h10 * m0.1 + h01 * p1.1 + h11 * m1.1;
    let z = PATH_DEPTH_M * (core::f64::consts::TAU * u).sin();
    Vec3::new(x, y, z)
}

/// Parameters of one extraneous-movement model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub class: MovementClass,
    pub amplitude_m: f64,
    pub frequency_hz: f64,
    pub seed: u64,
    pub noise_sigma_m: f64,
}

impl PerturbationSpec {
    /// Shipped defaults for a class at the given tempo and meter.
    ///
    /// Knee bounces twice per bar, waist sways once per bar, feet rock with a
    /// two-bar period, the wrist jitters at 5 Hz, and the upper arm swells the
    /// pattern once per beat.
    pub fn default_for(class: MovementClass, seed: u64, tempo_bpm: f64, beats_per_bar: usize) -> Self {
        let bar = bar_length_s(tempo_bpm, beats_per_bar);
        let frequency_hz = match class {
            MovementClass::Control => 0.0,
            MovementClass::Knee => 2.0 / bar,
            MovementClass::Waist => 1.0 / bar,
            MovementClass::Feet => 0.5 / bar,
            MovementClass::Wrist => DEFAULT_WRIST_HZ,
            MovementClass::UpperArm => beats_per_bar as f64 / bar,
        };
        Self {
            class,
            amplitude_m: if class == MovementClass::Control { 0.0 } else { DEFAULT_AMPLITUDE_M },
            frequency_hz,
            seed,
            noise_sigma_m: DEFAULT_NOISE_SIGMA_M,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma_m = sigma;
        self
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude_m = a;
        self
    }

    /// Checks ranges; a control spec always carries zero amplitude.
    pub fn validated(mut self) -> Result<Self, InvalidSpec> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.amplitude_m) {
            return Err(InvalidSpec(format!("amplitude {} must be ≥ 0", self.amplitude_m)));
        }
        if !ok(self.frequency_hz) {
            return Err(InvalidSpec(format!("frequency {} must be ≥ 0", self.frequency_hz)));
        }
        if !ok(self.noise_sigma_m) {
            return Err(InvalidSpec(format!("noise sigma {} must be ≥ 0", self.noise_sigma_m)));
        }
        if self.class == MovementClass::Control {
            self.amplitude_m = 0.0;
        }
        Ok(self)
    }

    /// Displacement added to the base path at time `t` (bar `k` starts at `bar_start`).
    fn offset(&self, t: f64, bar_start: f64, base: Vec3<f64>) -> Vec3<f64> {
        use core::f64::consts::TAU;
        let a = self.amplitude_m;
        let w = TAU * self.frequency_hz;
        match self.class {
            MovementClass::Control => Vec3::zero(),
            MovementClass::Knee => Vec3::new(0.0, -a * (1.0 - (w * t).cos()) / 2.0, 0.0),
            MovementClass::Waist => Vec3::new(a * (w * t).sin(), 0.0, 0.0),
            MovementClass::Feet => {
                let s = (w * t).sin();
                Vec3::new(a * s, -0.5 * a * s * s, 0.0)
            }
            MovementClass::Wrist => {
                let tau = t - bar_start;
                Vec3::new(a * (w * tau).sin(), 0.5 * a * (w * tau).cos(), 0.0)
            }
            MovementClass::UpperArm => {
                let swell = (1.0 + (w * t).cos()) / 2.0;
                let cx = base.x / (PATH_WIDTH_M / 2.0);
                let cy = (base.y - PATH_HEIGHT_M / 2.0) / (PATH_HEIGHT_M / 2.0);
                Vec3::new(a * cx * swell, a * cy * swell, 0.0)
            }
        }
    }
}

/// Timing of a generated capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthTiming {
    pub tempo_bpm: f64,
    pub beats_per_bar: usize,
    pub bars: usize,
    pub rate_hz: f64,
}

impl SynthTiming {
    pub fn new(tempo_bpm: f64, beats_per_bar: usize, bars: usize) -> Self {
        Self {
            tempo_bpm,
            beats_per_bar,
            bars,
            rate_hz: DEFAULT_RATE_HZ,
        }
    }

    pub fn bar_length(&self) -> f64 {
        bar_length_s(self.tempo_bpm, self.beats_per_bar)
    }

    /// Frames per bar: the nominal rate rounded so bars hold whole frames.
    pub fn frames_per_bar(&self) -> usize {
        ((self.bar_length() * self.rate_hz).round() as usize).max(2)
    }

    fn validate(&self) -> Result<(), InvalidSpec> {
        if self.beats_per_bar != 4 {
            return Err(InvalidSpec(format!(
                "only the 4/4 pattern is modeled, got {} beats per bar",
                self.beats_per_bar
            )));
        }
        if !(self.tempo_bpm.is_finite() && self.tempo_bpm > 0.0) {
            return Err(InvalidSpec("tempo must be positive".into()));
        }
        if self.bars == 0 {
            return Err(InvalidSpec("at least one bar is required".into()));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(InvalidSpec("rate must be positive".into()));
        }
        Ok(())
    }

    /// Frame instants `k·L + r·L/M`, ending with one frame exactly at `bars·L`.
    fn instants(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let l = self.bar_length();
        let m = self.frames_per_bar();
        (0..=self.bars * m).map(move |i| {
            let (k, r) = (i / m, i % m);
            (k, k as f64 * l + l * r as f64 / m as f64)
        })
    }
}

fn noise_vector(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3<f64> {
    // per-axis sigma so that the vector's RMS length is `sigma`
    let per_axis = sigma / 3f64.sqrt();
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    let (x, y, z) = (draw(), draw(), draw());
    if sigma == 0.0 {
        Vec3::zero()
    } else {
        Vec3::new(x, y, z) * per_axis
    }
}

fn tip_at(spec: &PerturbationSpec, timing: &SynthTiming, t: f64, bar: usize) -> Vec3<f64> {
    let l = timing.bar_length();
    let bar_start = bar as f64 * l;
    let base = base_path((t - bar_start) / l);
    Vec3::from(PATH_ORIGIN) + base + spec.offset(t, bar_start, base)
}

/// Labeled tip-position capture of `bars` bars starting at beat 1.
pub fn generate_synthetic(
    beats_per_bar: usize,
    tempo_bpm: f64,
    bars: usize,
    spec: &PerturbationSpec,
) -> Result<CaptureSequence<f64>, InvalidSpec> {
    generate_with(&SynthTiming::new(tempo_bpm, beats_per_bar, bars), spec)
}

pub fn generate_with(timing: &SynthTiming, spec: &PerturbationSpec) -> Result<CaptureSequence<f64>, InvalidSpec> {
    timing.validate()?;
    let spec = spec.validated()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let frames = timing
        .instants()
        .map(|(k, t)| CaptureFrame::new(t, tip_at(&spec, timing, t, k) + noise_vector(&mut rng, spec.noise_sigma_m)))
        .collect();
    let meta = SequenceMeta {
        tempo_bpm: timing.tempo_bpm,
        beats_per_bar: timing.beats_per_bar,
        label: Some(spec.class),
        start_anchor_t: Some(0.0),
    };
    CaptureSequence::new(frames, meta).map_err(|e| InvalidSpec(e.to_string()))
}

/// IMU and palm streams whose reconstruction is a known tip path.
#[derive(Debug, Clone)]
pub struct PairedStreams {
    pub imu: Vec<ImuSample<f64>>,
    pub palm: Vec<CaptureFrame<f64>>,
    /// Noise-free tip path the streams encode, including the lead-in.
    pub tip: CaptureSequence<f64>,
}

/// How the baton is held while tracing the synthetic path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grip {
    /// Baton direction at the pattern center, world frame.
    pub rest_direction: Vec3<f64>,
    /// How strongly the baton swings toward the tip's offset from center, 1/m.
    pub wrist_gain: f64,
    /// Sensor orientation when its axes align with the tracker's.
    pub mounting: RotationMatrix<f64>,
    pub baton: BatonSpec<f64>,
}

impl Default for Grip {
    fn default() -> Self {
        Self {
            rest_direction: Vec3::new(0.0, 0.6, -0.8),
            wrist_gain: 2.0,
            mounting: RotationMatrix::identity(),
            baton: BatonSpec::default(),
        }
    }
}

impl Grip {
    fn direction(&self, tip: Vec3<f64>) -> Vec3<f64> {
        let center = Vec3::from(PATH_ORIGIN) + Vec3::new(0.0, PATH_HEIGHT_M / 2.0, 0.0);
        (self.rest_direction + (tip - center) * self.wrist_gain)
            .normalized()
            .expect("baton direction is non-degenerate")
    }

    /// `(palm, sensor orientation)` producing the given tip.
    fn pose_for(&self, tip: Vec3<f64>) -> (Vec3<f64>, RotationMatrix<f64>) {
        let d = self.direction(tip);
        let pointing = RotationMatrix::between(Vec3::unit_y(), d).expect("unit vectors");
        let palm = tip - d * self.baton.length_m();
        (palm, self.mounting * pointing)
    }
}

/// Paired IMU/palm streams for a synthetic capture.
///
/// A short still lead-in (negative times) precedes the first downbeat at
/// `t = 0`. Gyro readings are the exact body rates between consecutive
/// samples; accelerometer readings include the palm's linear acceleration.
/// Palm positions carry the perturbation's tracking noise.
pub fn generate_paired(timing: &SynthTiming, spec: &PerturbationSpec, grip: &Grip) -> Result<PairedStreams, InvalidSpec> {
    timing.validate()?;
    let spec = spec.validated()?;
    let clean = PerturbationSpec { noise_sigma_m: 0.0, ..spec };
    let dt = timing.bar_length() / timing.frames_per_bar() as f64;
    let lead = (LEAD_IN_S / dt).round() as usize;

    let mut times: Vec<(usize, f64)> = (0..lead).map(|j| (0, -((lead - j) as f64) * dt)).collect();
    times.extend(timing.instants());

    let tip_of = |t: f64, k: usize| tip_at(&clean, timing, t.max(0.0), k);
    let palm_of = |t: f64, k: usize| grip.pose_for(tip_of(t, k)).0;
    // second difference of the palm path; the path is smooth within a bar
    let palm_accel = |t: f64, k: usize| {
        if t <= 0.0 {
            return Vec3::zero();
        }
        let h = 1e-4;
        let k_of = |s: f64| ((s / timing.bar_length()).floor().max(0.0) as usize).min(k);
        let (a, b, c) = (palm_of(t - h, k_of(t - h)), palm_of(t, k), palm_of(t + h, k));
        (a + c - b * 2.0) / (h * h)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut imu = Vec::with_capacity(times.len());
    let mut palm = Vec::with_capacity(times.len());
    let mut tip = Vec::with_capacity(times.len());
    let mut prev: Option<(f64, RotationMatrix<f64>)> = None;
    for &(k, t) in &times {
        let tip_pos = tip_of(t, k);
        let (palm_pos, r) = grip.pose_for(tip_pos);
        let gyro = match prev {
            Some((t0, r0)) => (r0.transpose() * r).log() / (t - t0),
            None => Vec3::zero(),
        };
        let specific_force = Vec3::new(0.0, GRAVITY, 0.0) + palm_accel(t, k);
        let accel = r.transpose().apply(specific_force);
        imu.push(ImuSample::new(t, accel, gyro));
        palm.push(CaptureFrame::new(t, palm_pos + noise_vector(&mut rng, spec.noise_sigma_m)));
        tip.push(CaptureFrame::new(t, tip_pos));
        prev = Some((t, r));
    }
    let meta = SequenceMeta {
        tempo_bpm: timing.tempo_bpm,
        beats_per_bar: timing.beats_per_bar,
        label: Some(spec.class),
        start_anchor_t: Some(0.0),
    };
    let tip = CaptureSequence::new(tip, meta).map_err(|e| InvalidSpec(e.to_string()))?;
    Ok(PairedStreams { imu, palm, tip })
}

/// Motionless IMU readings at a fixed orientation, e.g. for calibration.
pub fn static_imu(orientation: &RotationMatrix<f64>, rate_hz: f64, count: usize, t0: f64) -> Vec<ImuSample<f64>> {
    let accel = orientation.transpose().apply(Vec3::new(0.0, GRAVITY, 0.0));
    (0..count)
        .map(|i| ImuSample::new(t0 + i as f64 / rate_hz, accel, Vec3::zero()))
        .collect()
}
