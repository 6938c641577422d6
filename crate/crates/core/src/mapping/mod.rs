//! Surface frames to synthesis controls.
//!
//! Three application modes share one surface: additive spectra, granular
//! grain parameters, and gesture-driven percussion triggers.

mod additive;
mod drums;
mod granular;

pub use additive::{additive_spectrum, HarmonicLayout, HarmonicSpectrum};
pub use drums::{
    column_changes, drum_triggers, gesture_features, trigger_pitch_class, trigger_velocity,
    DrumMapper, DrumParams, DrumState, GestureFeatures, TriggerEvent,
};
pub use granular::{granular_controls, GrainBounds, GrainControls, GrainMode, GrainParams};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Additive,
    Granular,
    Drums,
}

impl SynthMode {
    pub fn name(self) -> &'static str {
        match self {
            SynthMode::Additive => "additive",
            SynthMode::Granular => "granular",
            SynthMode::Drums => "drums",
        }
    }
}

impl std::str::FromStr for SynthMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "additive" => Ok(SynthMode::Additive),
            "granular" => Ok(SynthMode::Granular),
            "drums" => Ok(SynthMode::Drums),
            other => Err(ConfigError::Invalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed mapping config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading mapping config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid mapping config: {0}")]
    Invalid(String),
}

fn d_f0() -> f64 {
    110.0
}
fn d_l_min() -> f64 {
    20.0
}
fn d_l_max() -> f64 {
    200.0
}
fn d_theta() -> f64 {
    4.0
}
fn d_cooldown() -> f64 {
    100.0
}
fn d_v_gain() -> f64 {
    8.0
}

/// The mapping configuration block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    pub mode: SynthMode,
    #[serde(default = "d_f0")]
    pub f0: f64,
    #[serde(rename = "L_min_ms", default = "d_l_min")]
    pub l_min_ms: f64,
    #[serde(rename = "L_max_ms", default = "d_l_max")]
    pub l_max_ms: f64,
    #[serde(default = "d_theta")]
    pub theta: f64,
    #[serde(default = "d_cooldown")]
    pub cooldown_ms: f64,
    #[serde(default = "d_v_gain")]
    pub v_gain: f64,
    /// Additive reduction: 12 column harmonics or one per rod.
    #[serde(default)]
    pub harmonics: HarmonicLayout,
    /// Which grain parameter the surface drives in granular mode.
    #[serde(default)]
    pub grain_param: GrainMode,
}

impl MappingConfig {
    pub fn new(mode: SynthMode) -> Self {
        Self {
            mode,
            f0: d_f0(),
            l_min_ms: d_l_min(),
            l_max_ms: d_l_max(),
            theta: d_theta(),
            cooldown_ms: d_cooldown(),
            v_gain: d_v_gain(),
            harmonics: HarmonicLayout::default(),
            grain_param: GrainMode::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return bad("f0 must be positive");
        }
        if !(self.l_min_ms > 0.0 && self.l_min_ms <= self.l_max_ms && self.l_max_ms.is_finite()) {
            return bad("grain lengths need 0 < L_min_ms <= L_max_ms");
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return bad("theta must be non-negative");
        }
        if !(self.cooldown_ms.is_finite() && self.cooldown_ms >= 0.0) {
            return bad("cooldown_ms must be non-negative");
        }
        if !(self.v_gain.is_finite() && self.v_gain >= 0.0) {
            return bad("v_gain must be non-negative");
        }
        Ok(())
    }

    pub fn grain_bounds(&self) -> GrainBounds {
        GrainBounds {
            l_min_ms: self.l_min_ms,
            l_max_ms: self.l_max_ms,
        }
    }

    pub fn drum_params(&self) -> DrumParams {
        DrumParams {
            theta: self.theta,
            cooldown_ms: self.cooldown_ms,
            v_gain: self.v_gain,
        }
    }
}
