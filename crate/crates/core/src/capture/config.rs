use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fusion::{DEFAULT_SMOOTHING_WIDTH, DEFAULT_TILT_GAIN};
use crate::geometry::{BatonSpec, DEFAULT_BATON_LENGTH_M};
use crate::pipeline::{DEFAULT_BEATS_PER_BAR, DEFAULT_N_POINTS, DEFAULT_TEMPO_BPM};

use super::synth::DEFAULT_RATE_HZ;

pub const MIN_RATE_HZ: f64 = 20.0;
pub const MAX_RATE_HZ: f64 = 500.0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Invalid(String),
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Session settings, stored as flat `key = value` lines.
///
/// ```text
/// tempo_bpm = 76.0
/// beats_per_bar = 4
/// n_points = 256
/// ```
///
/// Missing keys take their defaults; unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tempo_bpm: f64,
    pub beats_per_bar: usize,
    pub n_points: usize,
    pub baton_length_m: f64,
    pub smoothing_width: usize,
    pub tilt_gain: f64,
    pub rate_hz: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tempo_bpm: DEFAULT_TEMPO_BPM,
            beats_per_bar: DEFAULT_BEATS_PER_BAR,
            n_points: DEFAULT_N_POINTS,
            baton_length_m: DEFAULT_BATON_LENGTH_M,
            smoothing_width: DEFAULT_SMOOTHING_WIDTH,
            tilt_gain: DEFAULT_TILT_GAIN,
            rate_hz: DEFAULT_RATE_HZ,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.tempo_bpm.is_finite() && self.tempo_bpm > 0.0) {
            return bad(format!("tempo_bpm must be positive, got {}", self.tempo_bpm));
        }
        if self.beats_per_bar == 0 {
            return bad("beats_per_bar must be at least 1".into());
        }
        if self.n_points < 2 || !self.n_points.is_multiple_of(self.beats_per_bar) {
            return bad(format!(
                "n_points {} must be at least 2 and a multiple of beats_per_bar {}",
                self.n_points, self.beats_per_bar
            ));
        }
        if let Err(e) = BatonSpec::new(self.baton_length_m) {
            return bad(e.to_string());
        }
        if self.smoothing_width == 0 {
            return bad("smoothing_width must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.tilt_gain) {
            return bad(format!("tilt_gain {} outside [0, 1]", self.tilt_gain));
        }
        if !(MIN_RATE_HZ..=MAX_RATE_HZ).contains(&self.rate_hz) {
            return bad(format!(
                "rate_hz {} outside [{MIN_RATE_HZ}, {MAX_RATE_HZ}]",
                self.rate_hz
            ));
        }
        Ok(())
    }

    pub fn baton(&self) -> BatonSpec<f64> {
        BatonSpec::new(self.baton_length_m).expect("validated baton length")
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
