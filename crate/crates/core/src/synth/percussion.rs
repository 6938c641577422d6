//! Synthesized drum voice for trigger events.
//!
//! Each event is a sine at `200 * 2^(pitch_class/3)` Hz mixed with white
//! noise band-passed around the same frequency, under an exponential decay
//! with a 150 ms time constant, scaled by `velocity/127`. The noise is seeded
//! from the event's lane, pitch and time, never its velocity, so two renders
//! differing only in velocity scale exactly.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sample_count, soft_clip, AudioBuffer, SynthError};
use crate::exec::Exec;
use crate::mapping::TriggerEvent;

/// Envelope time constant.
pub const PERCUSSION_DECAY_S: f64 = 0.150;
/// Voices are cut when the envelope falls below 1e-4.
const TAIL_S: f64 = PERCUSSION_DECAY_S * 9.210_340_371_976_184; // ln(1e4)
const NOISE_Q: f64 = 4.0;

pub fn center_frequency(pitch_class: u8) -> f64 {
    200.0 * (pitch_class as f64 / 3.0).exp2()
}

fn event_seed(e: &TriggerEvent) -> u64 {
    (e.t_ms.to_bits() ^ ((e.lane as u64) << 56) ^ ((e.pitch_class as u64) << 48))
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One voice, unscaled by the mix, starting at its own sample 0.
fn render_voice(e: &TriggerEvent, sample_rate: u32) -> Vec<f64> {
    let sr = sample_rate as f64;
    let len = (TAIL_S * sr).ceil() as usize;
    let fc = center_frequency(e.pitch_class).min(0.45 * sr);
    let amp = e.velocity.min(127) as f64 / 127.0;

    // RBJ band-pass, 0 dB peak gain.
    let w0 = TAU * fc / sr;
    let alpha = w0.sin() / (2.0 * NOISE_Q);
    let a0 = 1.0 + alpha;
    let (b0, b2) = (alpha / a0, -alpha / a0);
    let (a1, a2) = (-2.0 * w0.cos() / a0, (1.0 - alpha) / a0);
    // Uniform noise in [-1, 1) has variance 1/3; the band-pass keeps roughly
    // (pi/2 * fc/Q) / (sr/2) of it. Normalize to the tone's RMS.
    let kept = (PI * fc / NOISE_Q) / sr / 3.0;
    let noise_gain = std::f64::consts::FRAC_1_SQRT_2 / kept.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(event_seed(e));
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            let x: f64 = rng.random_range(-1.0..1.0);
            let y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
            (x2, x1) = (x1, x);
            (y2, y1) = (y1, y);
            let env = (-t / PERCUSSION_DECAY_S).exp();
            amp * env * (0.5 * (TAU * fc * t).sin() + 0.5 * noise_gain * y)
        })
        .collect()
}

/// Mix of all events before limiting.
pub fn render_percussion_unlimited(
    events: &[TriggerEvent],
    duration_s: f64,
    sample_rate: u32,
) -> Result<Vec<f64>, SynthError> {
    render_percussion_unlimited_with(Exec::default(), events, duration_s, sample_rate)
}

pub fn render_percussion_unlimited_with(
    exec: Exec,
    events: &[TriggerEvent],
    duration_s: f64,
    sample_rate: u32,
) -> Result<Vec<f64>, SynthError> {
    let n = sample_count(duration_s, sample_rate)?;
    let voices = exec.map(events, |e| render_voice(e, sample_rate));
    let mut mix = vec![0.0f64; n];
    for (e, voice) in events.iter().zip(voices) {
        let start = (e.t_ms / 1000.0 * sample_rate as f64).round().max(0.0) as usize;
        if start >= n {
            continue;
        }
        for (slot, v) in mix[start..].iter_mut().zip(voice) {
            *slot += v;
        }
    }
    Ok(mix)
}

pub fn render_percussion(
    events: &[TriggerEvent],
    duration_s: f64,
    sample_rate: u32,
) -> Result<AudioBuffer, SynthError> {
    let mix = render_percussion_unlimited(events, duration_s, sample_rate)?;
    Ok(AudioBuffer::new(
        mix.into_iter().map(|v| soft_clip(v as f32)).collect(),
        sample_rate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t_ms: f64, lane: u8, velocity: u8, pitch_class: u8) -> TriggerEvent {
        TriggerEvent { t_ms, lane, velocity, pitch_class }
    }

    #[test]
    fn no_events_silence() {
        assert!(render_percussion(&[], 1.0, 44100).unwrap().is_silent());
    }

    #[test]
    fn louder_velocity_louder_peak() {
        let loud = render_percussion(&[ev(10.0, 2, 127, 5)], 0.5, 44100).unwrap();
        let soft = render_percussion(&[ev(10.0, 2, 64, 5)], 0.5, 44100).unwrap();
        assert!(loud.peak() >= soft.peak());
        assert!(soft.peak() > 0.0);
    }

    #[test]
    fn superposition() {
        let a = ev(100.0, 1, 90, 2);
        let b = ev(100.0, 7, 40, 9);
        let both = render_percussion_unlimited(&[a, b], 1.0, 22050).unwrap();
        let sa = render_percussion_unlimited(&[a], 1.0, 22050).unwrap();
        let sb = render_percussion_unlimited(&[b], 1.0, 22050).unwrap();
        for i in 0..both.len() {
            assert!((both[i] - (sa[i] + sb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn frequencies_follow_pitch_class() {
        assert_eq!(center_frequency(0), 200.0);
        assert!((center_frequency(3) - 400.0).abs() < 1e-9);
        assert!(center_frequency(11) > center_frequency(10));
    }

    #[test]
    fn events_past_the_end_are_dropped() {
        let out = render_percussion(&[ev(5000.0, 0, 127, 0)], 1.0, 8000).unwrap();
        assert!(out.is_silent());
        assert_eq!(out.len(), 8000);
    }
}
