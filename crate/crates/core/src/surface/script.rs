//! Gesture scripts: reproducible stand-ins for a hand on the surface.
//!
//! A script holds two kinds of input, both in counts (0..=127):
//!
//! * **Keyframes** pin individual rods. A rod mentioned by several keyframes
//!   follows the piecewise-linear path through its points and is released
//!   after its last one. A rod mentioned by a single keyframe is held at that
//!   value from the keyframe time until the end of the script.
//! * **Generators** add a smooth pattern over the whole surface for the full
//!   script duration. With `u` the rod's row or column (per `axis`) and
//!   `w = 2*pi*freq_hz*t + phase`:
//!   - `wave`:  `A * (0.5 + 0.5 * sin(w - 2*pi*u/12))`, a travelling wave
//!   - `press`: `A * max(0, sin(w))`, the whole palm pushing in and out
//!   - `ramp`:  `A * (u/11) * (0.5 + 0.5 * sin(w))`, a tilting plane
//!
//! The summed target is clamped to `[0, 127]`. Rods with neither input are
//! released and spring back.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{rod_coords, GRID_SIDE, MAX_COUNT, ROD_COUNT};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("malformed script JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading script: {0}")]
    Io(#[from] std::io::Error),
    #[error("keyframe times must be strictly increasing ({prev} ms then {next} ms)")]
    NonIncreasingTime { prev: u64, next: u64 },
    #[error("keyframe at {t_ms} ms lies past the script duration {duration_ms} ms")]
    KeyframePastEnd { t_ms: u64, duration_ms: u64 },
    #[error("rod index {0} out of range 0..=143")]
    RodIndex(usize),
    #[error("target value {0} out of range 0..=127")]
    Value(u8),
    #[error("generator {index}: {reason}")]
    Generator { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Wave,
    Press,
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodTarget {
    pub rod_index: usize,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub t_ms: u64,
    pub targets: Vec<RodTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub axis: Axis,
    pub freq_hz: f64,
    /// Peak contribution in counts.
    pub amplitude: f64,
    /// Radians.
    pub phase: f64,
}

impl Generator {
    /// Contribution in counts for the rod at (`row`, `col`) at `t_ms`.
    pub fn value_at(&self, t_ms: f64, row: usize, col: usize) -> f64 {
        let u = match self.axis {
            Axis::Row => row,
            Axis::Col => col,
        } as f64;
        let w = 2.0 * PI * self.freq_hz * t_ms / 1000.0 + self.phase;
        match self.kind {
            GeneratorKind::Wave => {
                self.amplitude * (0.5 + 0.5 * (w - 2.0 * PI * u / GRID_SIDE as f64).sin())
            }
            GeneratorKind::Press => self.amplitude * w.sin().max(0.0),
            GeneratorKind::Ramp => {
                self.amplitude * (u / (GRID_SIDE - 1) as f64) * (0.5 + 0.5 * w.sin())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureScript {
    pub duration_ms: u64,
    #[serde(default)]
    pub keyframes: Vec<Keyframe>,
    #[serde(default)]
    pub generators: Vec<Generator>,
}

impl GestureScript {
    /// A script that touches nothing for `duration_ms`.
    pub fn idle(duration_ms: u64) -> Self {
        Self {
            duration_ms,
            keyframes: Vec::new(),
            generators: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let script: Self = serde_json::from_str(text)?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        let mut prev: Option<u64> = None;
        for kf in &self.keyframes {
            if let Some(p) = prev {
                if kf.t_ms <= p {
                    return Err(ScriptError::NonIncreasingTime { prev: p, next: kf.t_ms });
                }
            }
            if kf.t_ms > self.duration_ms {
                return Err(ScriptError::KeyframePastEnd {
                    t_ms: kf.t_ms,
                    duration_ms: self.duration_ms,
                });
            }
            prev = Some(kf.t_ms);
            for t in &kf.targets {
                if t.rod_index >= ROD_COUNT {
                    return Err(ScriptError::RodIndex(t.rod_index));
                }
                if t.value > MAX_COUNT {
                    return Err(ScriptError::Value(t.value));
                }
            }
        }
        for (index, g) in self.generators.iter().enumerate() {
            let bad = |reason: &str| ScriptError::Generator {
                index,
                reason: reason.to_string(),
            };
            if !(g.freq_hz.is_finite() && g.freq_hz >= 0.0) {
                return Err(bad("freq_hz must be finite and non-negative"));
            }
            if !(g.amplitude.is_finite() && (0.0..=MAX_COUNT as f64).contains(&g.amplitude)) {
                return Err(bad("amplitude must lie in 0..=127 counts"));
            }
            if !g.phase.is_finite() {
                return Err(bad("phase must be finite"));
            }
        }
        Ok(())
    }

    /// Precomputes per-rod keyframe tracks.
    pub fn targets(&self) -> ScriptTargets<'_> {
        let mut tracks: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ROD_COUNT];
        for kf in &self.keyframes {
            for t in &kf.targets {
                tracks[t.rod_index].push((kf.t_ms as f64, t.value as f64));
            }
        }
        ScriptTargets { script: self, tracks }
    }
}

/// Evaluates a script's rod targets over time.
#[derive(Debug, Clone)]
pub struct ScriptTargets<'a> {
    script: &'a GestureScript,
    tracks: Vec<Vec<(f64, f64)>>,
}

impl ScriptTargets<'_> {
    fn track_value(&self, rod: usize, t_ms: f64) -> Option<f64> {
        let track = &self.tracks[rod];
        let (first_t, first_v) = *track.first()?;
        if t_ms < first_t {
            return None;
        }
        if track.len() == 1 {
            return Some(first_v);
        }
        let (last_t, last_v) = *track.last().unwrap();
        if t_ms > last_t {
            return None;
        }
        if t_ms == last_t {
            return Some(last_v);
        }
        let seg = track.windows(2).find(|w| t_ms >= w[0].0 && t_ms < w[1].0)?;
        let ((t0, v0), (t1, v1)) = (seg[0], seg[1]);
        Some(v0 + (v1 - v0) * (t_ms - t0) / (t1 - t0))
    }

    /// Target counts per rod at `t_ms`, `None` where the rod is released.
    pub fn at(&self, t_ms: f64) -> [Option<f64>; ROD_COUNT] {
        if t_ms > self.script.duration_ms as f64 {
            return [None; ROD_COUNT];
        }
        let gens = &self.script.generators;
        std::array::from_fn(|rod| {
            let pinned = self.track_value(rod, t_ms);
            if pinned.is_none() && gens.is_empty() {
                return None;
            }
            let (row, col) = rod_coords(rod);
            let g: f64 = gens.iter().map(|g| g.value_at(t_ms, row, col)).sum();
            Some((pinned.unwrap_or(0.0) + g).clamp(0.0, MAX_COUNT as f64))
        })
    }
}
