//! Deterministic synthetic test signals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// First three formant frequencies (Hz) of a few adult vowels.
const VOWELS: [[f64; 3]; 6] = [
    [270.0, 2290.0, 3010.0],
    [530.0, 1840.0, 2480.0],
    [730.0, 1090.0, 2440.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
    [660.0, 1720.0, 2410.0],
];
const FORMANT_BANDWIDTHS: [f64; 3] = [90.0, 130.0, 190.0];

/// Noise band (centre Hz, bandwidth Hz) for fricative-like consonants.
const FRICATIVES: [(f64, f64); 4] = [(5500.0, 3000.0), (3200.0, 1800.0), (1800.0, 1500.0), (6500.0, 2500.0)];

/// Babble-free utterance of short words: voiced vowel nuclei on a gliding
/// fundamental with formant transitions, fricative and plosive consonants,
/// and pauses between words. Peak-normalized to 0.5.
pub fn speech_like(seed: u64, secs: f64, sample_rate: u32) -> Result<AudioSignal> {
    if !(secs > 0.0) || sample_rate == 0 {
        return Err(Error::InvalidConfig("speech_like needs a positive duration and sample rate".into()));
    }
    let fs = sample_rate as f64;
    let len = (secs * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; len];
    let mut f0 = rng.random_range(95.0..210.0);
    let mut formants = VOWELS[rng.random_range(0..VOWELS.len())];

    let mut at = samples(rng.random_range(0.03..0.10), fs);
    while at < len {
        let syllables = rng.random_range(1..=3);
        for _ in 0..syllables {
            if rng.random_bool(0.7) {
                at = consonant(&mut out, at, fs, &mut rng);
            }
            let target = VOWELS[rng.random_range(0..VOWELS.len())];
            let dur = samples(rng.random_range(0.07..0.20), fs);
            let f0_end = (f0 * rng.random_range(0.85..1.15f64)).clamp(85.0, 260.0);
            let level = 10f64.powf(rng.random_range(-8.0..0.0) / 20.0);
            vowel(&mut out, at, dur, fs, (f0, f0_end), (formants, target), level, &mut rng);
            at += dur;
            f0 = f0_end;
            formants = target;
            if rng.random_bool(0.4) {
                at = consonant(&mut out, at, fs, &mut rng);
            }
        }
        at += samples(rng.random_range(0.06..0.30), fs);
    }
    for v in out.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *v += 1e-5 * g;
    }
    AudioSignal::new(out, sample_rate)?.peak_normalized(0.5)
}

fn samples(secs: f64, fs: f64) -> usize {
    (secs * fs).round() as usize
}

/// Raised-cosine fade of `ramp` samples at both ends.
fn edge_gain(i: usize, dur: usize, ramp: usize) -> f64 {
    let ramp = ramp.min(dur / 2).max(1);
    let from_edge = i.min(dur - 1 - i);
    if from_edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (PI * from_edge as f64 / ramp as f64).cos()
    }
}

#[allow(clippy::too_many_arguments)]
fn vowel(
    out: &mut [f64],
    start: usize,
    dur: usize,
    fs: f64,
    (f0_a, f0_b): (f64, f64),
    (from, to): ([f64; 3], [f64; 3]),
    level: f64,
    rng: &mut ChaCha8Rng,
) {
    let end = (start + dur).min(out.len());
    let transition = (0.4 * dur as f64).max(1.0);
    let harmonics = (4500.0f64.min(fs / 2.0 - 200.0) / f0_a.min(f0_b)).floor() as usize;
    let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mut phase = 0.0;
    let ramp = samples(0.012, fs);
    for n in start..end {
        let i = n - start;
        let t = i as f64 / dur as f64;
        let f0 = f0_a + (f0_b - f0_a) * t;
        phase += 2.0 * PI * f0 / fs;
        let mix = (i as f64 / transition).min(1.0);
        let mut sample = 0.0;
        for (h, p) in phases.iter().enumerate() {
            let f = (h + 1) as f64 * f0;
            if f >= fs / 2.0 {
                break;
            }
            let mut gain = 0.0;
            for j in 0..3 {
                let fc = from[j] + (to[j] - from[j]) * mix;
                gain += 1.0 / (1.0 + ((f - fc) / FORMANT_BANDWIDTHS[j]).powi(2)) / (j + 1) as f64;
            }
            // −12 dB/octave glottal tilt, flattened by the formant peaks
            sample += (gain + 0.01) * (100.0 / f).min(1.0) * ((h + 1) as f64 * phase + p).sin();
        }
        out[n] += level * edge_gain(i, dur, ramp) * sample;
    }
}

/// A fricative (band noise) or a plosive (closure then burst). Returns the sample
/// index where it ends.
fn consonant(out: &mut [f64], start: usize, fs: f64, rng: &mut ChaCha8Rng) -> usize {
    if rng.random_bool(0.35) {
        let closure = samples(rng.random_range(0.02..0.06), fs);
        let burst = samples(rng.random_range(0.008..0.025), fs);
        let centre = rng.random_range(1000.0..4500.0);
        band_noise(out, start + closure, burst, fs, (centre, 2500.0), 0.12, 0.002, rng);
        start + closure + burst
    } else {
        let dur = samples(rng.random_range(0.05..0.13), fs);
        let band = FRICATIVES[rng.random_range(0..FRICATIVES.len())];
        let level = 10f64.powf(rng.random_range(-26.0..-14.0) / 20.0);
        band_noise(out, start, dur, fs, band, level, 0.01, rng);
        start + dur
    }
}

/// Gaussian noise through a two-pole resonator.
#[allow(clippy::too_many_arguments)]
fn band_noise(
    out: &mut [f64],
    start: usize,
    dur: usize,
    fs: f64,
    (centre, bandwidth): (f64, f64),
    level: f64,
    ramp_secs: f64,
    rng: &mut ChaCha8Rng,
) {
    let centre = centre.min(0.45 * fs);
    let radius = (-PI * bandwidth / fs).exp();
    let (a1, a2) = (2.0 * radius * (2.0 * PI * centre / fs).cos(), -radius * radius);
    let norm = (1.0 - radius) * 2.0;
    let (mut y1, mut y2) = (0.0, 0.0);
    let ramp = samples(ramp_secs, fs);
    let end = (start + dur).min(out.len());
    for n in start..end {
        let x: f64 = StandardNormal.sample(rng);
        let y = norm * x + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        out[n] += level * edge_gain(n - start, dur, ramp) * y;
    }
}
