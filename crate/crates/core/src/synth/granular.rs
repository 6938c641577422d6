//! Rod-per-grain granular engine.
//!
//! The source is cut into 144 equal regions; region `i` belongs to rod `i`.
//! Output time is divided into matching segments, and segment `r` of each
//! pass plays the grain ranked `r` by the current controls. Within a segment,
//! Hann-windowed grains start every half grain-length (50% overlap), with the
//! length snapped so a whole number of half-grains fills the segment. A grain
//! reads its region from the point matching its offset into the segment,
//! stepping `pitch_ratio` source samples per output sample with linear
//! interpolation and wrapping circularly. With identity controls (gain 1,
//! ratio 1, natural order) segment `r` reads region `r` in step with output
//! time and the overlapping windows sum to one, so the source comes back out.

use std::f64::consts::TAU;

use super::{sample_count, soft_clip, AudioBuffer, SynthError};
use crate::exec::Exec;
use crate::frame::ROD_COUNT;
use crate::mapping::{GrainControls, GrainMode};

/// One grain bound to one rod.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrainDescriptor {
    pub source_offset: usize,
    /// Samples.
    pub length: usize,
    pub gain: f64,
    pub pitch_ratio: f64,
}

/// Evenly partitions `source` into `n_grains` grains of `base_length_ms`.
pub fn slice_grains(
    source: &AudioBuffer,
    n_grains: usize,
    base_length_ms: f64,
) -> Result<Vec<GrainDescriptor>, SynthError> {
    if source.is_empty() {
        return Err(SynthError::EmptySource);
    }
    let len = source.len() as u64;
    let length = (base_length_ms * source.sample_rate as f64 / 1000.0).round().max(1.0) as usize;
    Ok((0..n_grains as u64)
        .map(|i| GrainDescriptor {
            source_offset: (i * len / n_grains as u64) as usize,
            length,
            gain: 1.0,
            pitch_ratio: 1.0,
        })
        .collect())
}

/// Grain controls sampled at a fixed frame period; held after the last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlsTimeline {
    pub frames: Vec<GrainControls>,
    pub frame_period_s: f64,
}

impl ControlsTimeline {
    pub fn new(frames: Vec<GrainControls>, frame_period_s: f64) -> Self {
        Self { frames, frame_period_s }
    }

    pub fn constant(controls: GrainControls) -> Self {
        Self::new(vec![controls], 1.0)
    }

    pub fn identity() -> Self {
        Self::constant(GrainControls::identity(GrainMode::Level))
    }

    fn index_at(&self, t_s: f64) -> usize {
        let i = (t_s / self.frame_period_s).max(0.0).floor() as usize;
        i.min(self.frames.len() - 1)
    }

    pub fn at(&self, t_s: f64) -> &GrainControls {
        &self.frames[self.index_at(t_s)]
    }
}

/// A grain placed on the output timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledGrain {
    /// Rod / region index.
    pub grain: usize,
    /// Output sample position of the window start (fractional).
    pub start: f64,
    /// Window length in output samples.
    pub length: f64,
    /// Source sample position read at the window start.
    pub read_start: f64,
    /// Source samples advanced per output sample.
    pub step: f64,
    pub gain: f64,
}

/// Lays out every grain for `duration_s` of output.
pub fn plan_granular(
    source: &AudioBuffer,
    timeline: &ControlsTimeline,
    duration_s: f64,
    sample_rate: u32,
) -> Result<Vec<ScheduledGrain>, SynthError> {
    if source.is_empty() {
        return Err(SynthError::EmptySource);
    }
    if timeline.frames.is_empty() || timeline.frame_period_s.is_nan() || timeline.frame_period_s <= 0.0 {
        return Err(SynthError::EmptyTimeline);
    }
    let total = sample_count(duration_s, sample_rate)? as f64;
    let sr = sample_rate as f64;
    let rate_ratio = source.sample_rate as f64 / sr;
    let region = source.len() as f64 / ROD_COUNT as f64;
    // Output samples per segment so that one pass spans the source at 1:1 speed.
    let segment = region / rate_ratio;

    let mut plan = Vec::new();
    let mut seg_index: u64 = 0;
    while (seg_index as f64) * segment < total {
        let seg_start = seg_index as f64 * segment;
        let controls = timeline.at(seg_start / sr);
        let rank = (seg_index % ROD_COUNT as u64) as usize;
        let grain = controls.playback_order()[rank];
        let p = controls.grains[grain];
        // Snap the hop so a whole number of half-grains tiles the segment.
        let half = (p.length_ms * sr / 1000.0 / 2.0).max(1.0);
        let n = (segment / half).round().max(1.0) as usize;
        let hop = segment / n as f64;
        for j in 0..n {
            let offset = j as f64 * hop;
            if seg_start + offset >= total {
                break;
            }
            plan.push(ScheduledGrain {
                grain,
                start: seg_start + offset,
                length: 2.0 * hop,
                read_start: grain as f64 * region + offset * rate_ratio,
                step: p.pitch_ratio * rate_ratio,
                gain: p.gain,
            });
        }
        seg_index += 1;
    }
    Ok(plan)
}

fn read_circular(source: &[f32], pos: f64) -> f64 {
    let len = source.len() as f64;
    let p = pos.rem_euclid(len);
    let i = p.floor() as usize % source.len();
    let j = (i + 1) % source.len();
    let frac = p - p.floor();
    source[i] as f64 * (1.0 - frac) + source[j] as f64 * frac
}

/// Renders one scheduled grain; returns its first output index and samples.
pub fn render_scheduled_grain(source: &AudioBuffer, g: &ScheduledGrain) -> (usize, Vec<f64>) {
    let first = g.start.ceil() as usize;
    let last = (g.start + g.length).ceil() as usize;
    let samples = (first..last)
        .map(|n| {
            let t = n as f64 - g.start;
            let w = 0.5 - 0.5 * (TAU * t / g.length).cos();
            g.gain * w * read_circular(&source.samples, g.read_start + t * g.step)
        })
        .collect();
    (first, samples)
}

pub fn render_granular(
    source: &AudioBuffer,
    timeline: &ControlsTimeline,
    duration_s: f64,
    sample_rate: u32,
) -> Result<AudioBuffer, SynthError> {
    render_granular_with(Exec::default(), source, timeline, duration_s, sample_rate)
}

/// Grains are rendered independently (in parallel when allowed), then mixed
/// in plan order and soft-clipped.
pub fn render_granular_with(
    exec: Exec,
    source: &AudioBuffer,
    timeline: &ControlsTimeline,
    duration_s: f64,
    sample_rate: u32,
) -> Result<AudioBuffer, SynthError> {
    let plan = plan_granular(source, timeline, duration_s, sample_rate)?;
    let n = sample_count(duration_s, sample_rate)?;
    let audible: Vec<ScheduledGrain> = plan.into_iter().filter(|g| g.gain != 0.0).collect();
    let rendered = exec.map(&audible, |g| render_scheduled_grain(source, g));
    let mut mix = vec![0.0f64; n];
    for (first, samples) in rendered {
        for (i, v) in samples.into_iter().enumerate() {
            if let Some(slot) = mix.get_mut(first + i) {
                *slot += v;
            }
        }
    }
    Ok(AudioBuffer::new(
        mix.into_iter().map(|v| soft_clip(v as f32)).collect(),
        sample_rate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::GrainParams;

    fn tone(len: usize, sr: u32) -> AudioBuffer {
        AudioBuffer::new(
            (0..len)
                .map(|n| 0.5 * (TAU * 220.0 * n as f64 / sr as f64).sin() as f32)
                .collect(),
            sr,
        )
    }

    #[test]
    fn even_offsets() {
        let src = AudioBuffer::silence(144_000, 44100);
        let g = slice_grains(&src, 144, 50.0).unwrap();
        assert_eq!(g.len(), 144);
        assert_eq!(g[0].source_offset, 0);
        assert_eq!(g[1].source_offset, 1000);
        assert_eq!(g[143].source_offset, 143_000);
        assert_eq!(g[0].length, 2205);
    }

    #[test]
    fn short_source_still_144_grains() {
        let src = AudioBuffer::silence(500, 44100);
        let g = slice_grains(&src, 144, 50.0).unwrap();
        assert_eq!(g.len(), 144);
        assert!(g.iter().all(|d| d.source_offset < 500));
        assert!(matches!(
            slice_grains(&AudioBuffer::silence(0, 44100), 144, 50.0),
            Err(SynthError::EmptySource)
        ));
        // Rendering from a source shorter than one window wraps around it.
        let out = render_granular(&tone(500, 44100), &ControlsTimeline::identity(), 0.2, 44100).unwrap();
        assert!(out.peak() > 0.1);
    }

    #[test]
    fn identity_reproduces_source() {
        let sr = 8000;
        let src = tone(sr as usize * 2, sr);
        let out = render_granular(&src, &ControlsTimeline::identity(), 1.5, sr).unwrap();
        // Skip the first half grain where only one window is active.
        let skip = (0.025 * sr as f64) as usize + 1;
        let err = out.samples[skip..]
            .iter()
            .zip(&src.samples[skip..])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn zero_gain_is_silent() {
        let mut c = GrainControls::identity(GrainMode::Level);
        c.grains.iter_mut().for_each(|g| g.gain = 0.0);
        let out = render_granular(&tone(10_000, 8000), &ControlsTimeline::constant(c), 1.0, 8000).unwrap();
        assert!(out.is_silent());
    }

    #[test]
    fn order_controls_segment_assignment() {
        let mut c = GrainControls::identity(GrainMode::Order);
        for (i, g) in c.grains.iter_mut().enumerate() {
            *g = GrainParams { rank: 143 - i, ..*g };
        }
        // 400-sample regions: two 50 ms grains (hop 200) per segment.
        let src = tone(57_600, 8000);
        let plan = plan_granular(&src, &ControlsTimeline::constant(c), 0.5, 8000).unwrap();
        assert_eq!(plan[0].grain, 143);
        assert!((plan[0].read_start - 143.0 * 400.0).abs() < 1e-9);
        assert_eq!(plan[1].grain, 143);
        assert_eq!(plan[2].grain, 142);
        assert_eq!(plan[2].start, 400.0);
    }

    #[test]
    fn every_rod_plays_even_when_regions_are_short() {
        // 100-sample regions, 400-sample grains: one snapped grain per segment.
        let src = tone(14_400, 8000);
        let plan = plan_granular(&src, &ControlsTimeline::identity(), 14_400.0 / 8000.0, 8000).unwrap();
        let mut seen = [false; ROD_COUNT];
        plan.iter().for_each(|g| seen[g.grain] = true);
        assert!(seen.iter().all(|&s| s));
        assert!(plan.iter().all(|g| g.length == 200.0));
    }

    #[test]
    fn pitch_ratio_sets_read_step() {
        let mut c = GrainControls::identity(GrainMode::Pitch);
        c.grains[0].pitch_ratio = 2.0;
        let src = tone(14_400, 8000);
        let plan = plan_granular(&src, &ControlsTimeline::constant(c), 0.1, 8000).unwrap();
        assert_eq!(plan[0].step, 2.0);
    }
}
