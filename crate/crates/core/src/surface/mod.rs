//! The 12x12 bed of spring-returned rods.
//!
//! Each tick a rod either follows its target (a script keyframe, a generator,
//! or a live edit) or relaxes toward rest at a constant rate. Its continuous
//! depth is then read back through the quadrature chain in [`crate::sensing`],
//! so the counters the rest of the system sees come from decoded phase
//! transitions, not from the simulation state directly.

mod script;

pub use script::{
    Axis, GestureScript, Generator, GeneratorKind, Keyframe, RodTarget, ScriptError, ScriptTargets,
};

use thiserror::Error;

use crate::exec::Exec;
use crate::frame::{SurfaceFrame, MAX_COUNT, ROD_COUNT};
use crate::sensing::{motion_phases, ChannelTracker, PositionCounter, QuadPhase};

/// Full travel of a rod in inches.
pub const TRAVEL_INCHES: f64 = 4.0;
/// 30 Hz frame period.
pub const DEFAULT_FRAME_PERIOD_MS: f64 = 1000.0 / 30.0;
/// Spring return speed in counts per second.
pub const DEFAULT_RETURN_RATE: f64 = 500.0;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("depth {0} in is outside the 0..=4 in travel")]
pub struct DepthError(pub f64);

/// Converts a depth in inches to a 7-bit count, rounding half up.
pub fn quantize(depth: f64) -> Result<u8, DepthError> {
    if !(0.0..=TRAVEL_INCHES).contains(&depth) {
        return Err(DepthError(depth));
    }
    Ok((depth / TRAVEL_INCHES * MAX_COUNT as f64 + 0.5).floor() as u8)
}

/// Depth in inches of a (possibly fractional) count.
pub fn counts_to_depth(counts: f64) -> f64 {
    (counts.clamp(0.0, MAX_COUNT as f64) / MAX_COUNT as f64) * TRAVEL_INCHES
}

/// Per-rod simulation state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RodChannel {
    depth: f64,
    /// Depth the rod is held at this tick, if any.
    target: Option<f64>,
    sensor: ChannelTracker,
}

impl RodChannel {
    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn target(&self) -> Option<f64> {
        self.target
    }

    pub fn counter(&self) -> u8 {
        self.sensor.counter.value()
    }

    pub fn phase(&self) -> QuadPhase {
        self.sensor.phase
    }

    /// Invalid transitions seen by this rod's decoder.
    pub fn invalid_transitions(&self) -> u64 {
        self.sensor.invalid
    }

    /// Forces the decoder state, e.g. to model a desynchronized counter.
    pub fn set_sensor(&mut self, phase: QuadPhase, counter: u8) {
        self.sensor = ChannelTracker::with_state(phase, PositionCounter::new(counter));
    }

    fn advance(&mut self, target_counts: Option<f64>, relax_inches: f64) {
        match target_counts {
            Some(c) => {
                let d = counts_to_depth(c);
                self.depth = d;
                self.target = Some(d);
            }
            None => {
                self.target = None;
                self.depth = (self.depth - relax_inches).max(0.0);
            }
        }
        self.depth = self.depth.clamp(0.0, TRAVEL_INCHES);
        let reading = quantize(self.depth).expect("depth clamped to travel");
        let stream = motion_phases(self.sensor.counter.value(), reading, self.sensor.phase);
        self.sensor.feed_all(stream);
    }
}

/// The full rod bed, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RodGrid {
    rods: Vec<RodChannel>,
    frame_period_ms: f64,
    return_rate: f64,
    exec: Exec,
}

impl Default for RodGrid {
    fn default() -> Self {
        Self::new()
    }
}

impl RodGrid {
    /// All rods at rest, counters at zero (boot state).
    pub fn new() -> Self {
        Self::with_dynamics(DEFAULT_FRAME_PERIOD_MS, DEFAULT_RETURN_RATE)
    }

    pub fn with_dynamics(frame_period_ms: f64, return_rate: f64) -> Self {
        assert!(frame_period_ms > 0.0 && return_rate >= 0.0);
        Self {
            rods: vec![RodChannel::default(); ROD_COUNT],
            frame_period_ms,
            return_rate,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn rods(&self) -> &[RodChannel] {
        &self.rods
    }

    pub fn rods_mut(&mut self) -> &mut [RodChannel] {
        &mut self.rods
    }

    pub fn frame_period_ms(&self) -> f64 {
        self.frame_period_ms
    }

    pub fn return_rate(&self) -> f64 {
        self.return_rate
    }

    /// Ticks one frame period. `targets` are in counts; `None` releases a rod.
    pub fn advance(&mut self, targets: &[Option<f64>; ROD_COUNT]) {
        let relax_counts = self.return_rate * self.frame_period_ms / 1000.0;
        let relax_inches = relax_counts / MAX_COUNT as f64 * TRAVEL_INCHES;
        self.exec
            .for_each_mut(&mut self.rods, |i, rod| rod.advance(targets[i], relax_inches));
    }

    /// Ticks one frame with the script's targets at `t_ms`.
    pub fn step(&mut self, script: &ScriptTargets<'_>, t_ms: f64) {
        self.advance(&script.at(t_ms));
    }

    /// Current counters as a frame; `seq` is reduced mod 128.
    pub fn snapshot(&self, seq: u64) -> SurfaceFrame {
        let positions = std::array::from_fn(|i| self.rods[i].counter());
        SurfaceFrame::new((seq % 128) as u8, positions).expect("counters are 7-bit")
    }

    /// True when every counter equals the quantized depth of its rod.
    pub fn counters_settled(&self) -> bool {
        self.rods
            .iter()
            .all(|r| quantize(r.depth).ok() == Some(r.counter()))
    }

    pub fn invalid_transitions(&self) -> u64 {
        self.rods.iter().map(|r| r.invalid_transitions()).sum()
    }
}

/// Value-returning form of [`RodGrid::step`].
pub fn step_simulation(grid: &RodGrid, script: &GestureScript, t_ms: f64) -> RodGrid {
    let mut next = grid.clone();
    next.step(&script.targets(), t_ms);
    next
}

/// Frames produced by stepping `script` from boot at the grid's frame rate,
/// one tick per frame over `[0, duration_ms)`.
pub fn run_script(grid: &mut RodGrid, script: &GestureScript) -> Vec<SurfaceFrame> {
    let targets = script.targets();
    let ticks = frame_count(script.duration_ms as f64, grid.frame_period_ms());
    (0..ticks)
        .map(|n| {
            grid.step(&targets, n as f64 * grid.frame_period_ms());
            grid.snapshot(n as u64)
        })
        .collect()
}

/// Ticks needed to cover `duration_ms`.
pub fn frame_count(duration_ms: f64, frame_period_ms: f64) -> usize {
    (duration_ms / frame_period_ms - 1e-9).ceil().max(0.0) as usize
}
