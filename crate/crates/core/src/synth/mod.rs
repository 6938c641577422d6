//! Offline audio rendering for the three mapping modes, plus WAV I/O.

mod additive;
mod granular;
mod percussion;
mod wav;

pub use additive::{
    render_additive_bank, render_additive_bank_with, render_additive_ifft, render_additive_ifft_with,
    smallest_aligned_block, SpectrumTimeline,
};
pub use granular::{
    plan_granular, render_granular, render_granular_with, render_scheduled_grain, slice_grains, ControlsTimeline,
    GrainDescriptor, ScheduledGrain,
};
pub use percussion::{
    center_frequency, render_percussion, render_percussion_unlimited,
    render_percussion_unlimited_with, PERCUSSION_DECAY_S,
};
pub use wav::{read_wav, write_wav};

use thiserror::Error;

use crate::exec::Exec;

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{harmonics} harmonics of {f0} Hz reach past Nyquist at {sample_rate} Hz")]
    Aliasing { f0: f64, harmonics: usize, sample_rate: u32 },
    #[error("block of {block_size} samples holds {periods} periods of {f0} Hz; must be a whole number")]
    NonIntegerPeriods { block_size: usize, f0: f64, periods: f64 },
    #[error("block size must be even and at least 2, got {0}")]
    BlockSize(usize),
    #[error("timeline is empty")]
    EmptyTimeline,
    #[error("timeline frames disagree on harmonic count or fundamental")]
    InconsistentTimeline,
    #[error("source audio is empty")]
    EmptySource,
    #[error("sample rate must be positive")]
    SampleRate,
    #[error("duration must be finite and non-negative, got {0}")]
    Duration(f64),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

/// Mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let e: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (e / self.samples.len() as f64).sqrt()
    }

    /// Every sample exactly zero.
    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }
}

/// Samples covering `duration_s` at `sample_rate`.
pub(crate) fn sample_count(duration_s: f64, sample_rate: u32) -> Result<usize, SynthError> {
    if sample_rate == 0 {
        return Err(SynthError::SampleRate);
    }
    if !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err(SynthError::Duration(duration_s));
    }
    Ok((duration_s * sample_rate as f64).round() as usize)
}

const CLIP_KNEE: f32 = 0.9;

/// Identity below 0.9, then a tanh shoulder bounded by 1.
pub fn soft_clip(x: f32) -> f32 {
    let a = x.abs();
    if a <= CLIP_KNEE {
        x
    } else {
        let room = 1.0 - CLIP_KNEE;
        x.signum() * (CLIP_KNEE + room * ((a - CLIP_KNEE) / room).tanh())
    }
}

pub fn soft_clip_buffer(exec: Exec, buf: &mut AudioBuffer) {
    exec.for_each_chunk_mut(&mut buf.samples, 8192, |_, c| {
        c.iter_mut().for_each(|s| *s = soft_clip(*s))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_clip_bounds() {
        assert_eq!(soft_clip(0.0), 0.0);
        assert_eq!(soft_clip(0.5), 0.5);
        assert_eq!(soft_clip(-0.9), -0.9);
        for x in [1.0f32, 2.0, 10.0, 1e6] {
            assert!(soft_clip(x) <= 1.0 && soft_clip(x) > 0.9);
            assert_eq!(soft_clip(-x), -soft_clip(x));
        }
        // Monotone through the knee.
        let mut prev = -2.0f32;
        for i in 0..4000 {
            let y = soft_clip(-2.0 + i as f32 * 0.001);
            assert!(y >= prev);
            prev = y;
        }
    }
}
