//! Additive rendering: a sinusoid oscillator bank and an inverse-FFT
//! overlap-add renderer that produce the same signal for static spectra.
//!
//! Both compute `(1/K) * sum_k a_k(t) * sin(2*pi*k*f0*t)`. The bank evaluates
//! it sample by sample with amplitudes interpolated between frames. The IFFT
//! path places each harmonic on an exact bin of an `N`-point block (so `N`
//! must hold a whole number of `f0` periods), sets the bin phase from the
//! block's absolute start time, and overlap-adds periodic-Hann-windowed
//! blocks at 50% hop; the windows sum to one, so a static spectrum is
//! reconstructed exactly.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{sample_count, AudioBuffer, SynthError};
use crate::exec::Exec;
use crate::mapping::HarmonicSpectrum;

/// Spectra sampled at a fixed frame period; amplitudes are linearly
/// interpolated between frames and held after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTimeline {
    pub frames: Vec<HarmonicSpectrum>,
    pub frame_period_s: f64,
}

impl SpectrumTimeline {
    pub fn new(frames: Vec<HarmonicSpectrum>, frame_period_s: f64) -> Self {
        Self { frames, frame_period_s }
    }

    /// One spectrum held forever.
    pub fn constant(spectrum: HarmonicSpectrum) -> Self {
        Self::new(vec![spectrum], 1.0)
    }

    fn check(&self) -> Result<(usize, f64), SynthError> {
        let first = self.frames.first().ok_or(SynthError::EmptyTimeline)?;
        let (k, f0) = (first.harmonics(), first.f0);
        if k == 0 || self.frames.iter().any(|s| s.harmonics() != k || s.f0 != f0) {
            return Err(SynthError::InconsistentTimeline);
        }
        if self.frame_period_s.is_nan() || self.frame_period_s <= 0.0 {
            return Err(SynthError::InconsistentTimeline);
        }
        Ok((k, f0))
    }

    /// Frame index and blend factor at time `t_s`.
    fn locate(&self, t_s: f64) -> (usize, usize, f64) {
        let last = self.frames.len() - 1;
        let pos = (t_s / self.frame_period_s).max(0.0);
        let i = pos.floor() as usize;
        if i >= last {
            (last, last, 0.0)
        } else {
            (i, i + 1, pos - i as f64)
        }
    }

    /// Amplitude of harmonic index `k` (0-based) at `t_s`.
    pub fn amplitude(&self, k: usize, t_s: f64) -> f64 {
        let (i, j, frac) = self.locate(t_s);
        let a = self.frames[i].amplitudes[k];
        a + frac * (self.frames[j].amplitudes[k] - a)
    }
}

fn check_nyquist(harmonics: usize, f0: f64, sample_rate: u32) -> Result<(), SynthError> {
    if f0 * harmonics as f64 >= sample_rate as f64 / 2.0 {
        return Err(SynthError::Aliasing { f0, harmonics, sample_rate });
    }
    Ok(())
}

const BANK_BLOCK: usize = 1024;

pub fn render_additive_bank(
    timeline: &SpectrumTimeline,
    duration_s: f64,
    sample_rate: u32,
) -> Result<AudioBuffer, SynthError> {
    render_additive_bank_with(Exec::default(), timeline, duration_s, sample_rate)
}

/// Oscillator bank. Each block restarts every oscillator from its exact
/// absolute phase and then advances it with a complex rotator, so blocks are
/// independent and phase stays continuous across block and frame boundaries.
pub fn render_additive_bank_with(
    exec: Exec,
    timeline: &SpectrumTimeline,
    duration_s: f64,
    sample_rate: u32,
) -> Result<AudioBuffer, SynthError> {
    let (k_count, f0) = timeline.check()?;
    check_nyquist(k_count, f0, sample_rate)?;
    let n = sample_count(duration_s, sample_rate)?;
    let sr = sample_rate as f64;
    let gain = 1.0 / k_count as f64;
    let mut out = vec![0.0f32; n];

    exec.for_each_chunk_mut(&mut out, BANK_BLOCK, |bi, chunk| {
        let n0 = bi * BANK_BLOCK;
        let len = chunk.len();
        let mut acc = vec![0.0f64; len];
        let locs: Vec<(usize, usize, f64)> =
            (0..len).map(|i| timeline.locate((n0 + i) as f64 / sr)).collect();
        for k in 0..k_count {
            let harmonic = (k + 1) as f64;
            let cycles = harmonic * f0 * n0 as f64 / sr;
            let theta = TAU * cycles.fract();
            let omega = TAU * harmonic * f0 / sr;
            let step = Complex::new(omega.cos(), omega.sin());
            let mut z = Complex::new(theta.cos(), theta.sin());
            let mut prev_loc = (usize::MAX, usize::MAX);
            let (mut a0, mut a1) = (0.0, 0.0);
            for (i, &(fi, fj, frac)) in locs.iter().enumerate() {
                if (fi, fj) != prev_loc {
                    a0 = timeline.frames[fi].amplitudes[k];
                    a1 = timeline.frames[fj].amplitudes[k];
                    prev_loc = (fi, fj);
                }
                let a = a0 + frac * (a1 - a0);
                if a != 0.0 {
                    acc[i] += a * z.im;
                }
                z *= step;
            }
        }
        for (o, a) in chunk.iter_mut().zip(acc) {
            *o = (a * gain) as f32;
        }
    });
    Ok(AudioBuffer::new(out, sample_rate))
}

pub fn render_additive_ifft(
    timeline: &SpectrumTimeline,
    duration_s: f64,
    sample_rate: u32,
    block_size: usize,
) -> Result<AudioBuffer, SynthError> {
    render_additive_ifft_with(Exec::default(), timeline, duration_s, sample_rate, block_size)
}

/// Periods of `f0` in one block, if whole.
fn bin_spacing(block_size: usize, f0: f64, sample_rate: u32) -> Result<usize, SynthError> {
    let periods = block_size as f64 * f0 / sample_rate as f64;
    let rounded = periods.round();
    if rounded < 1.0 || (periods - rounded).abs() > 1e-9 * periods.max(1.0) {
        return Err(SynthError::NonIntegerPeriods { block_size, f0, periods });
    }
    Ok(rounded as usize)
}

/// Smallest even block of at least `min_len` samples holding whole periods of `f0`.
pub fn smallest_aligned_block(f0: f64, sample_rate: u32, min_len: usize) -> Option<usize> {
    (min_len.max(2)..=1 << 20)
        .filter(|n| n % 2 == 0)
        .find(|&n| bin_spacing(n, f0, sample_rate).is_ok())
}

pub fn render_additive_ifft_with(
    exec: Exec,
    timeline: &SpectrumTimeline,
    duration_s: f64,
    sample_rate: u32,
    block_size: usize,
) -> Result<AudioBuffer, SynthError> {
    let (k_count, f0) = timeline.check()?;
    check_nyquist(k_count, f0, sample_rate)?;
    if block_size < 2 || !block_size.is_multiple_of(2) {
        return Err(SynthError::BlockSize(block_size));
    }
    let spacing = bin_spacing(block_size, f0, sample_rate)?;
    let n = sample_count(duration_s, sample_rate)?;
    let sr = sample_rate as f64;
    let hop = block_size / 2;
    let gain = 1.0 / k_count as f64;

    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(block_size);
    let window: Vec<f64> = (0..block_size)
        .map(|i| 0.5 - 0.5 * (TAU * i as f64 / block_size as f64).cos())
        .collect();

    // Block b starts at b*hop - hop so the first half-block is covered twice.
    let blocks = n.div_ceil(hop) + 1;
    let rendered: Vec<Vec<f64>> = exec.map_range(blocks, |b| {
        let start = b as i64 * hop as i64 - hop as i64;
        let center_s = (start as f64 + hop as f64) / sr;
        let mut bins = vec![Complex::new(0.0, 0.0); block_size];
        let half_n = block_size as f64 / 2.0;
        for k in 0..k_count {
            let a = timeline.amplitude(k, center_s.max(0.0));
            if a == 0.0 {
                continue;
            }
            let harmonic = (k + 1) as f64;
            let phi = TAU * (harmonic * f0 * start as f64 / sr).rem_euclid(1.0);
            // a*sin(phi + w n) = IDFT of N*a/(2i) e^{i phi} at +m and its conjugate at -m.
            let c = Complex::new(phi.sin(), -phi.cos()) * (half_n * a);
            let m = (k + 1) * spacing;
            bins[m] += c;
            bins[block_size - m] += c.conj();
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut bins, &mut scratch);
        let norm = gain / block_size as f64;
        bins.iter()
            .zip(&window)
            .map(|(c, w)| c.re * norm * w)
            .collect()
    });

    let mut out = vec![0.0f64; n];
    for (b, block) in rendered.iter().enumerate() {
        let start = b as i64 * hop as i64 - hop as i64;
        for (i, v) in block.iter().enumerate() {
            let idx = start + i as i64;
            if idx >= 0 && (idx as usize) < n {
                out[idx as usize] += v;
            }
        }
    }
    Ok(AudioBuffer::new(
        out.into_iter().map(|v| v as f32).collect(),
        sample_rate,
    ))
}
