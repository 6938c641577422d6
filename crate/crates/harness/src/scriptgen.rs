//! Canned gesture scripts.

use matrix_core::frame::ROD_COUNT;
use matrix_core::surface::{Axis, GestureScript, Generator, GeneratorKind, Keyframe, RodTarget, ScriptError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScriptKind {
    /// Travelling sine across the surface.
    Wave,
    /// One rod pressed and held.
    Press,
    /// Depth rising linearly along an axis, swelling in time.
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptParams {
    pub duration_ms: u64,
    pub freq_hz: f64,
    /// Counts.
    pub amplitude: f64,
    pub axis: Axis,
    pub phase: f64,
    /// Press target.
    pub rod: usize,
    pub value: u8,
    pub start_ms: u64,
    pub hold_ms: u64,
}

impl Default for ScriptParams {
    fn default() -> Self {
        Self {
            duration_ms: 10_000,
            freq_hz: 0.5,
            amplitude: 127.0,
            axis: Axis::Col,
            phase: 0.0,
            rod: 0,
            value: 127,
            start_ms: 0,
            hold_ms: 500,
        }
    }
}

/// Builds and validates a script of the given archetype.
pub fn generate_script(kind: ScriptKind, p: &ScriptParams) -> Result<GestureScript, ScriptError> {
    let generator = |kind| Generator {
        kind,
        axis: p.axis,
        freq_hz: p.freq_hz,
        amplitude: p.amplitude,
        phase: p.phase,
    };
    let script = match kind {
        ScriptKind::Wave => GestureScript {
            duration_ms: p.duration_ms,
            keyframes: vec![],
            generators: vec![generator(GeneratorKind::Wave)],
        },
        ScriptKind::Ramp => GestureScript {
            duration_ms: p.duration_ms,
            keyframes: vec![],
            generators: vec![generator(GeneratorKind::Ramp)],
        },
        ScriptKind::Press => {
            if p.rod >= ROD_COUNT {
                return Err(ScriptError::RodIndex(p.rod));
            }
            let hold = |t_ms| Keyframe {
                t_ms,
                targets: vec![RodTarget {
                    rod_index: p.rod,
                    value: p.value,
                }],
            };
            let end = p.start_ms + p.hold_ms.max(1);
            GestureScript {
                duration_ms: p.duration_ms.max(end),
                keyframes: vec![hold(p.start_ms), hold(end)],
                generators: vec![],
            }
        }
    };
    script.validate()?;
    Ok(script)
}
