//! Reverberant waveform in, dereverberated waveform out.

use std::time::{Duration, Instant};

use crate::audio::AudioSignal;
use crate::error::Result;
use crate::model::SolverConfig;
use crate::reconstruct::{reconstruct, ReconstructMethod};
use crate::solver::{run, SolverState};
use crate::stft::{analyze, power, PowerSpectrogram, StftConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DereverbConfig {
    pub stft: StftConfig,
    pub solver: SolverConfig,
    pub method: ReconstructMethod,
}

impl DereverbConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub stft: Duration,
    pub solver: Duration,
    pub reconstruct: Duration,
}

#[derive(Debug, Clone)]
pub struct DereverbOutput {
    pub signal: AudioSignal,
    pub observed: PowerSpectrogram,
    pub estimate: PowerSpectrogram,
    pub state: SolverState,
    pub timings: StageTimings,
}

pub fn dereverberate(input: &AudioSignal, config: &DereverbConfig) -> Result<DereverbOutput> {
    config.validate()?;
    let t = Instant::now();
    let spec = analyze(input, &config.stft)?;
    let observed = power(&spec);
    let stft_time = t.elapsed();

    let t = Instant::now();
    let state = run(observed.data().view(), &config.solver)?;
    let solver_time = t.elapsed();

    let t = Instant::now();
    let estimate = PowerSpectrogram::new(state.s.clone(), config.stft, input.sample_rate())?;
    let signal = reconstruct(&estimate, &spec, config.method)?;
    Ok(DereverbOutput {
        signal,
        observed,
        estimate,
        state,
        timings: StageTimings {
            stft: stft_time,
            solver: solver_time,
            reconstruct: t.elapsed(),
        },
    })
}
