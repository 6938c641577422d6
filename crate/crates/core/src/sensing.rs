//! Optical quadrature sensing chain.
//!
//! Each rod carries a striped pattern read by two offset receivers, `a` and
//! `b`. Moving the rod by one count advances the pair one step around the Gray
//! cycle `00 -> 01 -> 11 -> 10 -> 00` (pressing) or the reverse (releasing).
//! A state machine turns consecutive phases into direction steps, and a 7-bit
//! counter bounded at both ends accumulates them. Because the counter
//! saturates instead of wrapping, a full press-and-release sweep always brings
//! it back to zero no matter how far it had drifted.

use std::fmt;

use crate::exec::Exec;

/// Largest value of a 7-bit position counter.
pub const COUNTER_MAX: u8 = 127;

/// Two-bit quadrature phase. `bits()` packs it as `a << 1 | b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct QuadPhase {
    pub a: bool,
    pub b: bool,
}

/// Forward (pressing) cycle in packed form: 00, 01, 11, 10.
const FORWARD_CYCLE: [u8; 4] = [0b00, 0b01, 0b11, 0b10];

impl QuadPhase {
    pub const fn new(a: bool, b: bool) -> Self {
        Self { a, b }
    }

    /// Builds a phase from the low two bits of `bits` (bit 1 = a, bit 0 = b).
    pub const fn from_bits(bits: u8) -> Self {
        Self {
            a: bits & 0b10 != 0,
            b: bits & 0b01 != 0,
        }
    }

    pub const fn bits(self) -> u8 {
        ((self.a as u8) << 1) | self.b as u8
    }

    fn cycle_pos(self) -> usize {
        match self.bits() {
            0b00 => 0,
            0b01 => 1,
            0b11 => 2,
            _ => 3,
        }
    }

    /// Next phase in the pressing direction.
    pub fn forward(self) -> Self {
        Self::from_bits(FORWARD_CYCLE[(self.cycle_pos() + 1) % 4])
    }

    /// Next phase in the releasing direction.
    pub fn backward(self) -> Self {
        Self::from_bits(FORWARD_CYCLE[(self.cycle_pos() + 3) % 4])
    }
}

impl fmt::Display for QuadPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.a as u8, self.b as u8)
    }
}

/// Outcome of decoding one phase transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepResult {
    Forward,
    Backward,
    None,
    /// Both channels changed at once; direction is unknowable.
    Invalid,
}

impl StepResult {
    pub fn delta(self) -> i8 {
        match self {
            StepResult::Forward => 1,
            StepResult::Backward => -1,
            StepResult::None | StepResult::Invalid => 0,
        }
    }
}

/// Saturating 7-bit position counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct PositionCounter(u8);

impl PositionCounter {
    pub const ZERO: Self = Self(0);

    /// Values above 127 are clamped.
    pub fn new(value: u8) -> Self {
        Self(value.min(COUNTER_MAX))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

/// Emits one Gray transition per count between `prev_count` and `new_count`.
pub fn encode_motion(prev_count: u8, new_count: u8, start_phase: QuadPhase) -> Vec<QuadPhase> {
    motion_phases(prev_count, new_count, start_phase).collect()
}

/// Iterator form of [`encode_motion`]; allocation free.
pub fn motion_phases(
    prev_count: u8,
    new_count: u8,
    start_phase: QuadPhase,
) -> impl Iterator<Item = QuadPhase> {
    let forward = new_count > prev_count;
    let steps = new_count.abs_diff(prev_count) as usize;
    let mut phase = start_phase;
    (0..steps).map(move |_| {
        phase = if forward { phase.forward() } else { phase.backward() };
        phase
    })
}

/// The direction-decoding state machine.
pub fn decode_transition(prev: QuadPhase, next: QuadPhase) -> StepResult {
    if prev == next {
        StepResult::None
    } else if prev.forward() == next {
        StepResult::Forward
    } else if prev.backward() == next {
        StepResult::Backward
    } else {
        StepResult::Invalid
    }
}

/// Applies one decoded step with saturation at both ends.
pub fn apply_step(counter: PositionCounter, step: StepResult) -> PositionCounter {
    match step {
        StepResult::Forward => PositionCounter(counter.0.saturating_add(1).min(COUNTER_MAX)),
        StepResult::Backward => PositionCounter(counter.0.saturating_sub(1)),
        StepResult::None | StepResult::Invalid => counter,
    }
}

/// Decoder state for one rod: last seen phase, counter, and invalid tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelTracker {
    pub phase: QuadPhase,
    pub counter: PositionCounter,
    pub invalid: u64,
}

impl ChannelTracker {
    /// Boot state: phase 00, counter 0.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_state(phase: QuadPhase, counter: PositionCounter) -> Self {
        Self {
            phase,
            counter,
            invalid: 0,
        }
    }

    pub fn feed(&mut self, next: QuadPhase) -> StepResult {
        let step = decode_transition(self.phase, next);
        if step == StepResult::Invalid {
            self.invalid += 1;
        }
        self.counter = apply_step(self.counter, step);
        self.phase = next;
        step
    }

    pub fn feed_all<I: IntoIterator<Item = QuadPhase>>(&mut self, stream: I) {
        for p in stream {
            self.feed(p);
        }
    }
}

/// Result of folding a phase stream through a tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackOutcome {
    pub counter: u8,
    pub invalid: u64,
}

/// Folds `stream` through a tracker starting from `state`.
pub fn track<I: IntoIterator<Item = QuadPhase>>(state: ChannelTracker, stream: I) -> TrackOutcome {
    let mut t = state;
    t.feed_all(stream);
    TrackOutcome {
        counter: t.counter.value(),
        invalid: t.invalid,
    }
}

/// Tracks many independent channels, each from boot state.
pub fn track_many(exec: Exec, streams: &[Vec<QuadPhase>]) -> Vec<TrackOutcome> {
    exec.map(streams, |s| track(ChannelTracker::new(), s.iter().copied()))
}

/// Phase stream for a full-range sweep: `press_steps` forward then
/// `release_steps` backward, continuing from `start_phase`.
pub fn sweep_phases(start_phase: QuadPhase, press_steps: usize, release_steps: usize) -> Vec<QuadPhase> {
    let mut out = Vec::with_capacity(press_steps + release_steps);
    let mut p = start_phase;
    for _ in 0..press_steps {
        p = p.forward();
        out.push(p);
    }
    for _ in 0..release_steps {
        p = p.backward();
        out.push(p);
    }
    out
}

/// Packs a phase stream into the one-byte-per-transition dump format.
pub fn dump_phases(stream: &[QuadPhase]) -> Vec<u8> {
    stream.iter().map(|p| p.bits()).collect()
}

/// Reads a phase dump; only bits 1:0 of each byte are significant.
pub fn load_phases(bytes: &[u8]) -> Vec<QuadPhase> {
    bytes.iter().map(|&b| QuadPhase::from_bits(b)).collect()
}
