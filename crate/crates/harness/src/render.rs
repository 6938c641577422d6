//! Offline pipeline: gesture script -> rod simulation -> serial link ->
//! mapping -> audio file plus a JSON run report.

use std::path::PathBuf;
use std::time::Instant;

use matrix_core::exec::Exec;
use matrix_core::frame::SurfaceFrame;
use matrix_core::mapping::{
    additive_spectrum, granular_controls, DrumMapper, MappingConfig, SynthMode, TriggerEvent,
};
use matrix_core::protocol::{encode_frame, DecodeTallies, FrameDecoder};
use matrix_core::surface::{run_script, GestureScript, RodGrid, ScriptError};
use matrix_core::synth::{
    read_wav, render_additive_bank_with, render_additive_ifft_with, render_granular_with,
    render_percussion, smallest_aligned_block, write_wav, AudioBuffer, ControlsTimeline,
    SpectrumTimeline, SynthError,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{AdditiveRenderer, SessionConfig, SessionError};

/// Bytes handed to the decoder per read, as a UART driver would.
const LINK_CHUNK: usize = 64;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("gesture script: {0}")]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("session has no script to render")]
    NoScript,
    #[error("serial link corrupted frames: {0:?}")]
    Codec(DecodeTallies),
    #[error("serial link returned {got} frames for {sent} sent, or altered their contents")]
    Mismatch { sent: usize, got: usize },
    #[error("no additive block size fits whole periods of {0} Hz")]
    NoAlignedBlock(f64),
    #[error("writing {path}: {source}")]
    Report {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderReport {
    pub mode: SynthMode,
    pub frames: usize,
    pub codec_tallies: DecodeTallies,
    pub invalid_transitions: u64,
    pub events: Vec<TriggerEvent>,
    pub peak_amplitude: f32,
    pub audio_seconds: f64,
    pub sample_rate: u32,
    pub render_seconds_per_audio_second: f64,
}

/// Everything one render produced, kept in memory.
#[derive(Debug, Clone)]
pub struct RenderOutcome {
    pub report: RenderReport,
    pub frames: Vec<SurfaceFrame>,
    pub audio: AudioBuffer,
}

/// Passes frames through the serial encoder and a chunked stream decoder.
pub fn serial_loopback(frames: &[SurfaceFrame]) -> (Vec<SurfaceFrame>, DecodeTallies) {
    let wire: Vec<u8> = frames.iter().flat_map(encode_frame).collect();
    let mut decoder = FrameDecoder::new();
    let mut out = Vec::with_capacity(frames.len());
    for chunk in wire.chunks(LINK_CHUNK) {
        decoder.push_into(chunk, &mut out);
    }
    (out, decoder.finish())
}

/// Drum events for a frame sequence starting at t = 0.
pub fn drum_events(mapping: &MappingConfig, frames: &[SurfaceFrame], period_ms: f64) -> Vec<TriggerEvent> {
    let mut mapper = DrumMapper::new(mapping.drum_params());
    frames
        .iter()
        .enumerate()
        .flat_map(|(n, f)| mapper.process(f, n as f64 * period_ms))
        .collect()
}

/// Runs the whole chain in memory. The timing in the report covers
/// simulation, link, mapping and synthesis.
pub fn render_session(
    cfg: &SessionConfig,
    script: &GestureScript,
    source: Option<&AudioBuffer>,
    exec: Exec,
) -> Result<RenderOutcome, RenderError> {
    script.validate()?;
    let started = Instant::now();
    let mapping = &cfg.mapping;

    let mut grid = RodGrid::new().with_exec(exec);
    let period_ms = grid.frame_period_ms();
    let sent = run_script(&mut grid, script);
    let (frames, tallies) = serial_loopback(&sent);
    if !tallies.is_clean() {
        return Err(RenderError::Codec(tallies));
    }
    if frames != sent {
        return Err(RenderError::Mismatch {
            sent: sent.len(),
            got: frames.len(),
        });
    }
    tracing::debug!(frames = frames.len(), "serial link clean");

    let duration_s = script.duration_ms as f64 / 1000.0;
    let period_s = period_ms / 1000.0;
    let sr = cfg.sample_rate;
    let mut events = Vec::new();
    let audio = match mapping.mode {
        SynthMode::Additive => {
            let spectra = frames
                .iter()
                .map(|f| additive_spectrum(f, mapping.harmonics, mapping.f0))
                .collect();
            let timeline = SpectrumTimeline::new(spectra, period_s);
            if frames.is_empty() {
                AudioBuffer::silence(0, sr)
            } else {
                match cfg.additive_renderer {
                    AdditiveRenderer::Bank => render_additive_bank_with(exec, &timeline, duration_s, sr)?,
                    AdditiveRenderer::Ifft => {
                        let block = smallest_aligned_block(mapping.f0, sr, 1024)
                            .ok_or(RenderError::NoAlignedBlock(mapping.f0))?;
                        render_additive_ifft_with(exec, &timeline, duration_s, sr, block)?
                    }
                }
            }
        }
        SynthMode::Granular => {
            let source = source.ok_or(SessionError::MissingSource)?;
            let controls = frames
                .iter()
                .map(|f| granular_controls(f, mapping.grain_param, mapping.grain_bounds()))
                .collect::<Vec<_>>();
            if controls.is_empty() {
                AudioBuffer::silence(0, sr)
            } else {
                let timeline = ControlsTimeline::new(controls, period_s);
                render_granular_with(exec, source, &timeline, duration_s, sr)?
            }
        }
        SynthMode::Drums => {
            events = drum_events(mapping, &frames, period_ms);
            render_percussion(&events, duration_s, sr)?
        }
    };

    let elapsed = started.elapsed().as_secs_f64();
    let report = RenderReport {
        mode: mapping.mode,
        frames: frames.len(),
        codec_tallies: tallies,
        invalid_transitions: grid.invalid_transitions(),
        events,
        peak_amplitude: audio.peak(),
        audio_seconds: audio.duration_s(),
        sample_rate: sr,
        render_seconds_per_audio_second: if duration_s > 0.0 { elapsed / duration_s } else { 0.0 },
    };
    Ok(RenderOutcome {
        report,
        frames,
        audio,
    })
}

/// Loads the script and source named by `cfg`, renders, and writes the WAV
/// and report. The reported timing includes file I/O.
pub fn run_render(cfg: &SessionConfig, exec: Exec) -> Result<RenderReport, RenderError> {
    cfg.validate()?;
    let started = Instant::now();
    let script_path = cfg.script.as_ref().ok_or(RenderError::NoScript)?;
    let script = GestureScript::load(script_path)?;
    let source = match (&cfg.source, cfg.mapping.mode) {
        (Some(p), SynthMode::Granular) => Some(read_wav(p)?),
        _ => None,
    };
    let mut outcome = render_session(cfg, &script, source.as_ref(), exec)?;
    write_wav(&outcome.audio, &cfg.output)?;
    if let Some(path) = &cfg.capture {
        let wire: Vec<u8> = outcome.frames.iter().flat_map(encode_frame).collect();
        std::fs::write(path, wire).map_err(|source| RenderError::Report {
            path: path.clone(),
            source,
        })?;
    }

    let duration_s = script.duration_ms as f64 / 1000.0;
    if duration_s > 0.0 {
        outcome.report.render_seconds_per_audio_second = started.elapsed().as_secs_f64() / duration_s;
    }
    let path = cfg.report_path();
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    std::fs::write(&path, json).map_err(|source| RenderError::Report { path, source })?;
    tracing::info!(
        frames = outcome.report.frames,
        events = outcome.report.events.len(),
        rtf = outcome.report.render_seconds_per_audio_second,
        "render done"
    );
    Ok(outcome.report)
}
