//! Gesture features and percussion triggers.
//!
//! Each of the 12 columns is a drum lane. A lane fires when its column moved
//! more than `theta` counts on average since the previous frame. Loudness
//! follows overall activity; pitch follows excursion inversely, so shallow
//! gentle play gives soft high drums and deep vigorous play gives loud low
//! ones.

use serde::{Deserialize, Serialize};

use crate::frame::{SurfaceFrame, GRID_SIDE, MAX_COUNT, ROD_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureFeatures {
    /// Mean absolute per-rod count change since the previous frame.
    pub activity: f64,
    /// Deepest rod in the current frame.
    pub excursion: u8,
}

pub fn gesture_features(cur: &SurfaceFrame, prev: &SurfaceFrame) -> GestureFeatures {
    let total: u32 = cur
        .positions()
        .iter()
        .zip(prev.positions())
        .map(|(&a, &b)| a.abs_diff(b) as u32)
        .sum();
    GestureFeatures {
        activity: total as f64 / ROD_COUNT as f64,
        excursion: cur.positions().iter().copied().max().unwrap_or(0),
    }
}

/// Mean absolute count change of each column.
pub fn column_changes(cur: &SurfaceFrame, prev: &SurfaceFrame) -> [f64; GRID_SIDE] {
    std::array::from_fn(|col| {
        let sum: u32 = cur
            .column(col)
            .iter()
            .zip(prev.column(col))
            .map(|(&a, b)| a.abs_diff(b) as u32)
            .sum();
        sum as f64 / GRID_SIDE as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrumParams {
    /// Column change (counts) a lane must exceed to fire.
    pub theta: f64,
    pub cooldown_ms: f64,
    pub v_gain: f64,
}

impl Default for DrumParams {
    fn default() -> Self {
        Self {
            theta: 4.0,
            cooldown_ms: 100.0,
            v_gain: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub t_ms: f64,
    pub lane: u8,
    pub velocity: u8,
    pub pitch_class: u8,
}

/// Per-lane time of the last trigger.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrumState {
    last_fire_ms: [Option<f64>; GRID_SIDE],
}

impl DrumState {
    pub fn last_fire_ms(&self, lane: usize) -> Option<f64> {
        self.last_fire_ms[lane]
    }
}

/// `clamp(round(v_gain * activity), 1, 127)`.
pub fn trigger_velocity(activity: f64, v_gain: f64) -> u8 {
    (v_gain * activity).round().clamp(1.0, MAX_COUNT as f64) as u8
}

/// `11 - floor(excursion / 128 * 12)`: deeper means lower.
pub fn trigger_pitch_class(excursion: u8) -> u8 {
    11 - (excursion.min(MAX_COUNT) as usize * GRID_SIDE / 128) as u8
}

pub fn drum_triggers(
    features: &GestureFeatures,
    column_change: &[f64; GRID_SIDE],
    state: &mut DrumState,
    params: &DrumParams,
    t_ms: f64,
) -> Vec<TriggerEvent> {
    let velocity = trigger_velocity(features.activity, params.v_gain);
    let pitch_class = trigger_pitch_class(features.excursion);
    let mut events = Vec::new();
    for (lane, &change) in column_change.iter().enumerate() {
        if change <= params.theta {
            continue;
        }
        // Tolerate float drift in frame timestamps (3 x 33.333 ms vs 100 ms).
        let cooled = state.last_fire_ms[lane]
            .is_none_or(|last| t_ms - last >= params.cooldown_ms - 1e-6);
        if !cooled {
            continue;
        }
        state.last_fire_ms[lane] = Some(t_ms);
        events.push(TriggerEvent {
            t_ms,
            lane: lane as u8,
            velocity,
            pitch_class,
        });
    }
    events
}

/// Frame-by-frame driver holding the previous frame and lane cooldowns.
#[derive(Debug, Clone)]
pub struct DrumMapper {
    params: DrumParams,
    state: DrumState,
    prev: SurfaceFrame,
}

impl DrumMapper {
    /// Starts from the boot frame (all rods at rest).
    pub fn new(params: DrumParams) -> Self {
        Self {
            params,
            state: DrumState::default(),
            prev: SurfaceFrame::zeroed(0),
        }
    }

    pub fn process(&mut self, frame: &SurfaceFrame, t_ms: f64) -> Vec<TriggerEvent> {
        let features = gesture_features(frame, &self.prev);
        let changes = column_changes(frame, &self.prev);
        self.prev = *frame;
        drum_triggers(&features, &changes, &mut self.state, &self.params, t_ms)
    }
}
