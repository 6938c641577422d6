use std::f64::consts::TAU;
use std::time::Instant;

use matrix_core::exec::Exec;
use matrix_core::frame::SurfaceFrame;
use matrix_core::mapping::{
    additive_spectrum, granular_controls, GrainBounds, GrainControls, GrainMode, HarmonicLayout,
    HarmonicSpectrum, TriggerEvent,
};
use matrix_core::synth::{
    plan_granular, render_additive_bank, render_additive_bank_with, render_additive_ifft,
    render_additive_ifft_with, render_granular, render_percussion, render_percussion_unlimited,
    render_scheduled_grain, smallest_aligned_block, AudioBuffer, ControlsTimeline,
    SpectrumTimeline,
};

const SR: u32 = 44_100;
const F0: f64 = 110.0;

/// |X_m|^2 of the DFT of `x` at integer bin `m`, via Goertzel.
fn goertzel_power(x: &[f32], m: usize) -> f64 {
    let w = TAU * m as f64 / x.len() as f64;
    let coeff = 2.0 * w.cos();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &v in x {
        let s0 = v as f64 + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    s1 * s1 + s2 * s2 - coeff * s1 * s2
}

/// Share of the signal's energy within +-1 bin of `freq` (both spectrum halves).
fn energy_near(x: &[f32], freq: f64, sr: u32) -> f64 {
    let n = x.len();
    let centre = (freq * n as f64 / sr as f64).round() as usize;
    let near: f64 = (centre - 1..=centre + 1).map(|m| goertzel_power(x, m)).sum();
    let total: f64 = x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() * n as f64;
    2.0 * near / total
}

fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

#[test]
fn single_harmonics_concentrate_energy() {
    for k in [1, 5, 12] {
        let tl = SpectrumTimeline::constant(HarmonicSpectrum::single(12, k, 1.0, F0));
        let bank = render_additive_bank(&tl, 1.0, SR).unwrap();
        let frac = energy_near(&bank.samples, k as f64 * F0, SR);
        assert!(frac >= 0.99, "bank k={k}: {frac}");
        let block = smallest_aligned_block(F0, SR, 2048).unwrap();
        let ifft = render_additive_ifft(&tl, 1.0, SR, block).unwrap();
        let frac = energy_near(&ifft.samples, k as f64 * F0, SR);
        assert!(frac >= 0.99, "ifft k={k}: {frac}");
    }
}

#[test]
fn fundamental_dominates_other_harmonic_bins() {
    let tl = SpectrumTimeline::constant(HarmonicSpectrum::single(12, 1, 1.0, F0));
    let out = render_additive_bank(&tl, 1.0, SR).unwrap();
    let p1 = goertzel_power(&out.samples, 110);
    for k in 2..=12 {
        let pk = goertzel_power(&out.samples, 110 * k);
        assert!(10.0 * (pk / p1).log10() < -40.0, "harmonic {k}");
    }
}

#[test]
fn static_rms_matches_sine() {
    let tl = SpectrumTimeline::constant(HarmonicSpectrum::single(12, 1, 1.0, F0));
    let out = render_additive_bank(&tl, 1.0, SR).unwrap();
    let expected = (1.0 / 12.0) / 2f64.sqrt();
    assert!((out.rms() - expected).abs() < 1e-4);
}

#[test]
fn bank_and_ifft_agree_for_static_spectra() {
    let uniform = additive_spectrum(&SurfaceFrame::uniform(0, 64), HarmonicLayout::Columns, F0);
    let positions: Vec<u8> = (0..144).map(|i| ((i * 37 + 11) % 128) as u8).collect();
    let frame = SurfaceFrame::from_slice(0, &positions).unwrap();
    let full = additive_spectrum(&frame, HarmonicLayout::Full, F0);
    let single = HarmonicSpectrum::single(12, 1, 1.0, F0);
    for spectrum in [single, uniform, full] {
        let tl = SpectrumTimeline::constant(spectrum);
        let bank = render_additive_bank(&tl, 0.5, SR).unwrap();
        let block = smallest_aligned_block(F0, SR, 1024).unwrap();
        let ifft = render_additive_ifft(&tl, 0.5, SR, block).unwrap();
        assert!(max_abs_diff(&bank.samples, &ifft.samples) < 1e-3);
    }
}

fn moving_timeline() -> SpectrumTimeline {
    let frames = (0..30)
        .map(|n| {
            let p: Vec<u8> = (0..144).map(|i| ((i * 7 + n * 29) % 128) as u8).collect();
            additive_spectrum(&SurfaceFrame::from_slice(0, &p).unwrap(), HarmonicLayout::Columns, F0)
        })
        .collect();
    SpectrumTimeline::new(frames, 1.0 / 30.0)
}

#[test]
fn bank_has_no_clicks_across_frame_changes() {
    let tl = moving_timeline();
    let out = render_additive_bank(&tl, 1.0, SR).unwrap();
    let g = 1.0 / 12.0;
    let dt = 1.0 / SR as f64;
    for n in 0..out.len() - 1 {
        let (t0, t1) = (n as f64 * dt, (n + 1) as f64 * dt);
        // Largest possible step of g * sum a_k(t) sin(w_k t) over one sample.
        let bound: f64 = (0..12)
            .map(|k| {
                let (a0, a1) = (tl.amplitude(k, t0), tl.amplitude(k, t1));
                g * (a0.max(a1) * TAU * (k + 1) as f64 * F0 * dt + (a1 - a0).abs())
            })
            .sum();
        let jump = (out.samples[n + 1] - out.samples[n]).abs() as f64;
        assert!(jump <= bound + 1e-5, "sample {n}: jump {jump} > {bound}");
    }
}

#[test]
fn rms_within_energy_bound() {
    let tl = moving_timeline();
    let out = render_additive_bank(&tl, 1.0, SR).unwrap();
    let bound = tl
        .frames
        .iter()
        .map(|s| s.amplitudes.iter().sum::<f64>() / 12.0)
        .fold(0.0, f64::max);
    assert!(out.rms() <= bound);
    assert!(out.peak() <= 1.0);
}

#[test]
fn sequential_and_parallel_renders_match() {
    let tl = moving_timeline();
    let a = render_additive_bank_with(Exec::Sequential, &tl, 0.5, SR).unwrap();
    let b = render_additive_bank_with(Exec::Parallel, &tl, 0.5, SR).unwrap();
    assert_eq!(a, b);
    let block = smallest_aligned_block(F0, SR, 1024).unwrap();
    let a = render_additive_ifft_with(Exec::Sequential, &tl, 0.5, SR, block).unwrap();
    let b = render_additive_ifft_with(Exec::Parallel, &tl, 0.5, SR, block).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ifft_is_cheaper_for_full_surface() {
    let full = HarmonicSpectrum {
        amplitudes: vec![0.5; 144],
        f0: F0,
    };
    let tl = SpectrumTimeline::constant(full);
    let block = smallest_aligned_block(F0, SR, 1024).unwrap();
    let best = |f: &dyn Fn()| {
        (0..3)
            .map(|_| {
                let t = Instant::now();
                f();
                t.elapsed()
            })
            .min()
            .unwrap()
    };
    let bank = best(&|| {
        render_additive_bank_with(Exec::Sequential, &tl, 2.0, SR).unwrap();
    });
    let ifft = best(&|| {
        render_additive_ifft_with(Exec::Sequential, &tl, 2.0, SR, block).unwrap();
    });
    assert!(ifft < bank, "ifft {ifft:?} vs bank {bank:?}");
}

fn noise_source(len: usize, sr: u32) -> AudioBuffer {
    // Deterministic broadband source: a few inharmonic partials plus an LCG hiss.
    let mut state = 0x1234_5678u32;
    let samples = (0..len)
        .map(|n| {
            state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            let hiss = (state >> 8) as f64 / (1u32 << 24) as f64 - 0.5;
            let t = n as f64 / sr as f64;
            (0.3 * (TAU * 233.0 * t).sin() + 0.2 * (TAU * 1_017.0 * t).sin() + 0.2 * hiss) as f32
        })
        .collect();
    AudioBuffer::new(samples, sr)
}

fn normalized_xcorr_peak(a: &[f32], b: &[f32], max_lag: usize) -> f64 {
    let n = a.len().min(b.len());
    let norm = |x: &[f32]| x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
    let denom = norm(&a[..n]) * norm(&b[..n]);
    (-(max_lag as isize)..=max_lag as isize)
        .map(|lag| {
            let s: f64 = (0..n)
                .filter_map(|i| {
                    let j = i as isize + lag;
                    (j >= 0 && (j as usize) < n).then(|| a[i] as f64 * b[j as usize] as f64)
                })
                .sum();
            s / denom
        })
        .fold(f64::MIN, f64::max)
}

#[test]
fn identity_granular_correlates_with_source() {
    let src = noise_source(SR as usize * 3, SR);
    let out = render_granular(&src, &ControlsTimeline::identity(), 3.0, SR).unwrap();
    let r = normalized_xcorr_peak(&out.samples, &src.samples, 8);
    assert!(r > 0.9, "correlation {r}");
}

#[test]
fn reversed_order_keeps_grain_energies() {
    let sr = 8000;
    let src = noise_source(144 * 400, sr);
    let natural = GrainControls::identity(GrainMode::Order);
    let heights: Vec<u8> = (0..144).map(|i| (i * 127 / 143) as u8).collect();
    let reversed = granular_controls(
        &SurfaceFrame::from_slice(0, &heights).unwrap(),
        GrainMode::Order,
        GrainBounds::default(),
    );
    assert_eq!(reversed.playback_order()[0], 143);
    let energies = |c: GrainControls| {
        let plan = plan_granular(&src, &ControlsTimeline::constant(c), src.duration_s(), sr).unwrap();
        let mut e: Vec<f64> = plan
            .iter()
            .map(|g| render_scheduled_grain(&src, g).1.iter().map(|v| v * v).sum())
            .collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let (a, b) = (energies(natural), energies(reversed));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 0.01 * x.max(*y), "{x} vs {y}");
    }
}

#[test]
fn zero_gain_surface_is_silent() {
    let c = granular_controls(&SurfaceFrame::zeroed(0), GrainMode::Level, GrainBounds::default());
    let out = render_granular(&noise_source(20_000, SR), &ControlsTimeline::constant(c), 1.0, SR).unwrap();
    assert!(out.is_silent());
}

#[test]
fn granular_output_is_limited() {
    // Loud source doubled in pitch: overlapping windows can exceed 1 before the clip.
    let src = AudioBuffer::new(
        (0..40_000).map(|n| if (n / 50) % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        SR,
    );
    let c = granular_controls(&SurfaceFrame::uniform(0, 127), GrainMode::Pitch, GrainBounds::default());
    let out = render_granular(&src, &ControlsTimeline::constant(c), 1.0, SR).unwrap();
    assert!(out.samples.iter().all(|s| s.abs() <= 1.0));
}

#[test]
fn percussion_superposes_and_is_limited() {
    let e = |t_ms, lane, velocity, pitch_class| TriggerEvent { t_ms, lane, velocity, pitch_class };
    let events = [e(0.0, 0, 127, 0), e(0.0, 5, 127, 11), e(250.0, 3, 60, 6)];
    let mix = render_percussion_unlimited(&events, 1.0, SR).unwrap();
    let sum = events.iter().fold(vec![0.0; mix.len()], |mut acc, ev| {
        let one = render_percussion_unlimited(std::slice::from_ref(ev), 1.0, SR).unwrap();
        acc.iter_mut().zip(one).for_each(|(a, b)| *a += b);
        acc
    });
    assert!(mix.iter().zip(&sum).all(|(a, b)| (a - b).abs() < 1e-9));
    let limited = render_percussion(&events, 1.0, SR).unwrap();
    assert!(limited.samples.iter().all(|s| s.abs() <= 1.0));
}

#[test]
fn percussion_velocity_scales_exactly() {
    let e = |velocity| TriggerEvent { t_ms: 40.0, lane: 2, velocity, pitch_class: 4 };
    let loud = render_percussion_unlimited(&[e(127)], 0.5, SR).unwrap();
    let soft = render_percussion_unlimited(&[e(64)], 0.5, SR).unwrap();
    for (l, s) in loud.iter().zip(&soft) {
        assert!((l * 64.0 / 127.0 - s).abs() < 1e-9);
    }
}

#[test]
fn percussion_centre_tracks_pitch_class() {
    // Energy near the nominal centre beats energy an octave and a half away.
    for pc in [0u8, 6, 11] {
        let ev = TriggerEvent { t_ms: 0.0, lane: 0, velocity: 100, pitch_class: pc };
        let out = render_percussion(&[ev], 1.0, SR).unwrap();
        let fc = 200.0 * (pc as f64 / 3.0).exp2();
        let at = goertzel_power(&out.samples, fc.round() as usize);
        let away = goertzel_power(&out.samples, (fc * 2.8).round() as usize);
        assert!(at > 10.0 * away, "pc {pc}");
    }
}
