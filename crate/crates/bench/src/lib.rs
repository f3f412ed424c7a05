//! Criterion benchmarks for the dereverberation chain. Inputs are synthetic and
//! seeded so numbers are comparable between runs.

use std::hint::black_box;
use std::time::Duration;

use criterion::{BenchmarkId, Criterion, Throughput};
use reverbkit::signals::speech_like;
use reverbkit::solver::{initialize, update_h, update_s};
use reverbkit::{
    analyze, apply_rir, dereverberate, evaluate, image_method_rir, power, run, synthesize, AudioSignal,
    DereverbConfig, PowerSpectrogram, RoomSpec, SolverConfig, StftConfig, WallAbsorption,
};

pub const SAMPLE_RATE: u32 = 16_000;

pub fn room(t60: f64) -> RoomSpec {
    RoomSpec::new([6.0, 4.0, 3.0], [1.5, 1.2, 1.5], [4.0, 2.5, 1.6], WallAbsorption::T60(t60), SAMPLE_RATE)
}

/// Dry speech-like signal and its reverberant version at `t60`.
pub fn fixture(secs: f64, t60: f64) -> (AudioSignal, AudioSignal) {
    let dry = speech_like(7, secs, SAMPLE_RATE).expect("valid duration");
    let spec = room(t60);
    let rir = image_method_rir(&spec, spec.default_length()).expect("valid room");
    let wet = apply_rir(&dry, &rir)
        .and_then(|w| w.peak_normalized(0.9))
        .expect("nonzero signal");
    (dry, wet)
}

pub fn observed_power(signal: &AudioSignal) -> PowerSpectrogram {
    power(&analyze(signal, &StftConfig::default()).expect("long enough"))
}

fn stft(c: &mut Criterion, wet: &AudioSignal) {
    let mut group = c.benchmark_group("stft");
    group.throughput(Throughput::Elements(wet.len() as u64));
    let cfg = StftConfig::default();
    group.bench_function("analyze", |b| b.iter(|| analyze(black_box(wet), &cfg).unwrap()));
    let spec = analyze(wet, &cfg).unwrap();
    group.bench_function("synthesize", |b| b.iter(|| synthesize(black_box(&spec)).unwrap()));
    group.finish();
}

fn solver(c: &mut Criterion, y: &PowerSpectrogram) {
    let mut group = c.benchmark_group("solver");
    let cfg = SolverConfig::default();
    let y = y.data().view();
    let state = initialize(y, &cfg).unwrap();
    group.bench_function("update_s", |b| {
        b.iter_batched_ref(|| state.clone(), |s| update_s(s, y, &cfg).unwrap(), criterion::BatchSize::LargeInput)
    });
    group.bench_function("update_h", |b| {
        b.iter_batched_ref(|| state.clone(), |s| update_h(s, y, &cfg).unwrap(), criterion::BatchSize::LargeInput)
    });
    for n_h in [5, 15, 30] {
        let cfg = SolverConfig { n_h, ..cfg };
        group.bench_with_input(BenchmarkId::new("run", n_h), &cfg, |b, cfg| b.iter(|| run(y, cfg).unwrap()));
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion, dry: &AudioSignal, wet: &AudioSignal) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    let config = DereverbConfig::default();
    group.bench_function("dereverberate_3s", |b| b.iter(|| dereverberate(black_box(wet), &config).unwrap()));
    group.bench_function("evaluate_3s", |b| b.iter(|| evaluate(dry, black_box(wet)).unwrap()));
    for t60 in [0.3, 0.6] {
        let spec = room(t60);
        group.bench_with_input(BenchmarkId::new("image_method_rir", t60), &spec, |b, spec| {
            b.iter(|| image_method_rir(spec, spec.default_length()).unwrap())
        });
    }
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    let (dry, wet) = fixture(3.0, 0.45);
    let y = observed_power(&wet);
    stft(c, &wet);
    solver(c, &y);
    end_to_end(c, &dry, &wet);
}
