use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use matrix_core::exec::Exec;
use matrix_core::mapping::{GrainControls, GrainMode, HarmonicSpectrum};
use matrix_core::sensing::{encode_motion, track_many, QuadPhase};
use matrix_core::surface::{Axis, GestureScript, Generator, GeneratorKind, RodGrid};
use matrix_core::synth::{
    render_additive_bank_with, render_additive_ifft_with, render_granular_with,
    smallest_aligned_block, AudioBuffer, ControlsTimeline, SpectrumTimeline,
};

const SR: u32 = 44_100;
const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn wave_script() -> GestureScript {
    GestureScript {
        duration_ms: 10_000,
        keyframes: vec![],
        generators: vec![Generator {
            kind: GeneratorKind::Wave,
            axis: Axis::Col,
            freq_hz: 0.5,
            amplitude: 127.0,
            phase: 0.0,
        }],
    }
}

fn grid_step(c: &mut Criterion) {
    let script = wave_script();
    let targets = script.targets();
    let mut g = c.benchmark_group("grid_step_300_ticks");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| {
                let mut grid = RodGrid::new().with_exec(exec);
                for n in 0..300 {
                    grid.step(&targets, n as f64 * grid.frame_period_ms());
                }
                black_box(grid.snapshot(0))
            })
        });
    }
    g.finish();
}

fn sensing(c: &mut Criterion) {
    let streams: Vec<Vec<QuadPhase>> = (0..144u32)
        .map(|i| {
            let mut phase = QuadPhase::default();
            let mut prev = 0u8;
            let mut s = Vec::new();
            for step in 0..2000u32 {
                let next = ((i * 31 + step * 17) % 128) as u8;
                let seg = encode_motion(prev, next, phase);
                phase = seg.last().copied().unwrap_or(phase);
                s.extend(seg);
                prev = next;
            }
            s
        })
        .collect();
    let mut g = c.benchmark_group("track_144_channels");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| black_box(track_many(exec, &streams))));
    }
    g.finish();
}

fn additive(c: &mut Criterion) {
    let tl = SpectrumTimeline::constant(HarmonicSpectrum {
        amplitudes: (0..144).map(|k| 1.0 / (k + 1) as f64).collect(),
        f0: 110.0,
    });
    let block = smallest_aligned_block(110.0, SR, 1024).unwrap();
    let mut g = c.benchmark_group("additive_k144_1s");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new("bank", name), &exec, |b, &e| {
            b.iter(|| black_box(render_additive_bank_with(e, &tl, 1.0, SR).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("ifft", name), &exec, |b, &e| {
            b.iter(|| black_box(render_additive_ifft_with(e, &tl, 1.0, SR, block).unwrap()))
        });
    }
    g.finish();
}

fn granular(c: &mut Criterion) {
    let src = AudioBuffer::new(
        (0..SR as usize * 4)
            .map(|n| (n as f32 * 0.013).sin() * 0.5)
            .collect(),
        SR,
    );
    let tl = ControlsTimeline::constant(GrainControls::identity(GrainMode::Level));
    let mut g = c.benchmark_group("granular_2s");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| black_box(render_granular_with(exec, &src, &tl, 2.0, SR).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, grid_step, sensing, additive, granular);
criterion_main!(benches);
