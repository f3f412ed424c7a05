//! Back to the time domain from an estimated clean power spectrogram, borrowing
//! the phase of the observed (reverberant) STFT.

use std::str::FromStr;

use ndarray::Zip;
use num_complex::Complex64;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};
use crate::stft::{power, synthesize, ComplexSpectrogram, PowerSpectrogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconstructMethod {
    /// `sqrt(S)·exp(i·∠X)`.
    #[default]
    MagnitudeReplace,
    /// `X·sqrt(S / (|X|² + ε))`.
    GainMask,
}

impl ReconstructMethod {
    pub fn name(self) -> &'static str {
        match self {
            ReconstructMethod::MagnitudeReplace => "magnitude_replace",
            ReconstructMethod::GainMask => "gain_mask",
        }
    }
}

impl FromStr for ReconstructMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude_replace" => Ok(ReconstructMethod::MagnitudeReplace),
            "gain_mask" => Ok(ReconstructMethod::GainMask),
            other => Err(Error::InvalidConfig(format!(
                "unknown reconstruction method `{other}` (expected magnitude_replace or gain_mask)"
            ))),
        }
    }
}

/// Complex spectrogram whose magnitudes follow `estimate` and whose phases come
/// from `reverberant`.
pub fn combine(
    estimate: &PowerSpectrogram,
    reverberant: &ComplexSpectrogram,
    method: ReconstructMethod,
) -> Result<ComplexSpectrogram> {
    if estimate.data().dim() != reverberant.data().dim() {
        return Err(Error::dims(format!(
            "estimate is {:?} but reverberant STFT is {:?}",
            estimate.data().dim(),
            reverberant.data().dim()
        )));
    }
    if estimate.config() != reverberant.config() {
        return Err(Error::dims("estimate and reverberant STFT use different frame settings"));
    }
    let mut out = reverberant.data().clone();
    match method {
        ReconstructMethod::MagnitudeReplace => {
            Zip::from(&mut out).and(estimate.data()).for_each(|z, &s| {
                let magnitude = s.max(0.0).sqrt();
                let norm = z.norm();
                *z = if norm > 0.0 {
                    *z * (magnitude / norm)
                } else {
                    Complex64::new(magnitude, 0.0)
                };
            });
        }
        ReconstructMethod::GainMask => {
            let observed = power(reverberant);
            let max = observed.data().iter().fold(0.0_f64, |m, &v| m.max(v));
            let eps = 1e-12 * max;
            Zip::from(&mut out)
                .and(estimate.data())
                .and(observed.data())
                .for_each(|z, &s, &y| {
                    let denom = y + eps;
                    let gain = if denom > 0.0 { (s.max(0.0) / denom).sqrt() } else { 0.0 };
                    *z *= gain;
                });
        }
    }
    reverberant.with_data(out)
}

pub fn reconstruct(
    estimate: &PowerSpectrogram,
    reverberant: &ComplexSpectrogram,
    method: ReconstructMethod,
) -> Result<AudioSignal> {
    synthesize(&combine(estimate, reverberant, method)?)
}
