//! Intrusive quality measures between a clean reference and a processed signal:
//! frequency-weighted segmental SNR and LP cepstral distance.
//!
//! Both work on 25 ms Hann frames with a 10 ms hop. Frames whose energy lies
//! more than 40 dB below the loudest frame are left out of the averages. The
//! test signal is truncated or zero-padded to the reference length; time
//! alignment is up to the caller.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

pub const FWSSNR_FLOOR_DB: f64 = -10.0;
pub const FWSSNR_CEILING_DB: f64 = 35.0;
pub const CEPSTRAL_DISTANCE_MAX: f64 = 10.0;
pub const NUM_CRITICAL_BANDS: usize = 25;
pub const BAND_WEIGHT_EXPONENT: f64 = 0.2;
pub const LPC_ORDER: usize = 10;
pub const ENERGY_GATE_DB: f64 = 40.0;
const LOWEST_BAND_HZ: f64 = 80.0;
const HIGHEST_BAND_HZ: f64 = 8000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub fwssnr_db: f64,
    pub cepstral_distance: f64,
    /// Frames that entered the fwsSNR average.
    pub frames_used: usize,
}

impl MetricsReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "fwssnr_db={:.6}\ncepstral_distance={:.6}\nframes_used={}\n",
            self.fwssnr_db, self.cepstral_distance, self.frames_used
        )
    }

    pub const CSV_HEADER: &'static str = "file,fwssnr_db,cepstral_distance,frames_used";

    pub fn csv_row(&self, file: &str) -> String {
        format!(
            "{file},{:.6},{:.6},{}",
            self.fwssnr_db, self.cepstral_distance, self.frames_used
        )
    }
}

/// Frame geometry shared by both measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Framing {
    len: usize,
    hop: usize,
    fft_len: usize,
}

impl Framing {
    fn for_rate(sample_rate: u32) -> Self {
        let fs = sample_rate as f64;
        let len = ((0.025 * fs).round() as usize).max(2);
        let hop = ((0.010 * fs).round() as usize).max(1);
        Self {
            len,
            hop,
            fft_len: (2 * len).next_power_of_two(),
        }
    }

    fn count(&self, samples: usize) -> usize {
        if samples < self.len {
            0
        } else {
            (samples - self.len) / self.hop + 1
        }
    }

    /// Symmetric Hann window of the frame length.
    fn window(&self) -> Vec<f64> {
        let n = self.len as f64;
        (0..self.len)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * (i as f64 + 1.0) / (n + 1.0)).cos()))
            .collect()
    }
}

struct Prepared {
    framing: Framing,
    frames: usize,
    clean: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
}

fn prepare(clean: &AudioSignal, test: &AudioSignal) -> Result<Prepared> {
    if clean.sample_rate() != test.sample_rate() {
        return Err(Error::SampleRateMismatch(clean.sample_rate(), test.sample_rate()));
    }
    let framing = Framing::for_rate(clean.sample_rate());
    let frames = framing.count(clean.len());
    if frames < 3 {
        return Err(Error::SignalTooShort {
            len: clean.len(),
            needed: framing.len + 2 * framing.hop,
        });
    }
    let test = test.resized(clean.len());
    let window = framing.window();
    let cut = |x: &[f64]| -> Vec<Vec<f64>> {
        (0..frames)
            .map(|m| {
                let start = m * framing.hop;
                x[start..start + framing.len]
                    .iter()
                    .zip(&window)
                    .map(|(s, w)| s * w)
                    .collect()
            })
            .collect()
    };
    Ok(Prepared {
        framing,
        frames,
        clean: cut(clean.samples()),
        test: cut(test.samples()),
    })
}

fn frame_energy(frame: &[f64]) -> f64 {
    frame.iter().map(|v| v * v).sum()
}

/// Frames within `ENERGY_GATE_DB` of the loudest frame.
fn active_frames(frames: &[Vec<f64>]) -> Vec<bool> {
    let energies: Vec<f64> = frames.iter().map(|f| frame_energy(f)).collect();
    let peak = energies.iter().fold(0.0_f64, |m, &e| m.max(e));
    let threshold = peak * 10f64.powf(-ENERGY_GATE_DB / 10.0);
    energies.iter().map(|&e| peak > 0.0 && e > 0.0 && e >= threshold).collect()
}

fn hz_to_bark(f: f64) -> f64 {
    26.81 * f / (1960.0 + f) - 0.53
}

fn bark_to_hz(z: f64) -> f64 {
    1960.0 * (z + 0.53) / (26.28 - z)
}

fn critical_bandwidth(f: f64) -> f64 {
    25.0 + 75.0 * (1.0 + 1.4 * (f / 1000.0).powi(2)).powf(0.69)
}

/// Gaussian-shaped critical-band weights over FFT bins `0..=fft_len/2`.
fn critical_band_filters(sample_rate: u32, fft_len: usize) -> Vec<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    let top = HIGHEST_BAND_HZ.min(nyquist);
    let (z_lo, z_hi) = (hz_to_bark(LOWEST_BAND_HZ), hz_to_bark(top));
    let bins = fft_len / 2 + 1;
    let hz_per_bin = sample_rate as f64 / fft_len as f64;
    let centers: Vec<f64> = (0..NUM_CRITICAL_BANDS)
        .map(|j| bark_to_hz(z_lo + (z_hi - z_lo) * j as f64 / (NUM_CRITICAL_BANDS - 1) as f64))
        .collect();
    let narrowest = critical_bandwidth(centers[0]);
    let cutoff = (-30.0 / (2.0 * 2.303_f64)).exp();
    centers
        .iter()
        .map(|&fc| {
            let bw_hz = critical_bandwidth(fc);
            let (center, width) = (fc / hz_per_bin, bw_hz / hz_per_bin);
            let scale = narrowest / bw_hz;
            (0..bins)
                .map(|b| {
                    let d = b as f64 - center;
                    let v = (-11.0 * d * d / (width * width)).exp() * scale;
                    if v > cutoff {
                        v
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Magnitude spectrum normalized to unit sum (all zeros for a silent frame).
fn normalized_magnitude(frame: &[f64], fft: &dyn rustfft::Fft<f64>, fft_len: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(fft_len, Complex64::default());
    fft.process(&mut buf);
    let mags: Vec<f64> = buf[..fft_len / 2 + 1].iter().map(|z| z.norm()).collect();
    let total: f64 = mags.iter().sum();
    if total > 0.0 {
        mags.into_iter().map(|m| m / total).collect()
    } else {
        mags
    }
}

fn band_snr_db(clean: f64, test: f64) -> f64 {
    let err = (clean - test).powi(2);
    let db = if err == 0.0 {
        FWSSNR_CEILING_DB
    } else if clean == 0.0 {
        FWSSNR_FLOOR_DB
    } else {
        10.0 * (clean * clean / err).log10()
    };
    db.clamp(FWSSNR_FLOOR_DB, FWSSNR_CEILING_DB)
}

/// Frequency-weighted segmental SNR in dB. Returns the mean and the number of frames used.
pub fn fwssnr_detailed(clean: &AudioSignal, test: &AudioSignal) -> Result<(f64, usize)> {
    let prep = prepare(clean, test)?;
    let filters = critical_band_filters(clean.sample_rate(), prep.framing.fft_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(prep.framing.fft_len);
    let active = active_frames(&prep.clean);

    let mut sum = 0.0;
    let mut used = 0;
    for m in (0..prep.frames).filter(|&m| active[m]) {
        let cs = normalized_magnitude(&prep.clean[m], fft.as_ref(), prep.framing.fft_len);
        let ts = normalized_magnitude(&prep.test[m], fft.as_ref(), prep.framing.fft_len);
        let (mut num, mut den) = (0.0, 0.0);
        for filter in &filters {
            let ce: f64 = filter.iter().zip(&cs).map(|(f, v)| f * v).sum();
            let te: f64 = filter.iter().zip(&ts).map(|(f, v)| f * v).sum();
            let w = ce.powf(BAND_WEIGHT_EXPONENT);
            num += w * band_snr_db(ce, te);
            den += w;
        }
        if den > 0.0 {
            sum += num / den;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::NoActiveFrames);
    }
    Ok((sum / used as f64, used))
}

pub fn fwssnr(clean: &AudioSignal, test: &AudioSignal) -> Result<f64> {
    fwssnr_detailed(clean, test).map(|(v, _)| v)
}

/// Autocorrelation-method linear prediction by Levinson-Durbin. Returns predictor
/// coefficients `α_1..α_p` with `x[n] ≈ Σ α_i·x[n−i]`, or `None` when the
/// autocorrelation matrix is not positive definite.
pub fn lpc(frame: &[f64], order: usize) -> Option<Vec<f64>> {
    let r: Vec<f64> = (0..=order)
        .map(|lag| {
            frame
                .iter()
                .zip(frame.iter().skip(lag))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    if !(r[0] > 0.0) {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    let mut err = r[0];
    for i in 1..=order {
        let acc = r[i] - (1..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / err;
        let prev = a.clone();
        a[i] = k;
        for j in 1..i {
            a[j] = prev[j] - k * prev[i - j];
        }
        err *= 1.0 - k * k;
        if !(err > 0.0) || !err.is_finite() {
            return None;
        }
    }
    Some(a[1..].to_vec())
}

/// Cepstrum `c_1..c_p` of the all-pole model `1 / (1 − Σ α_i z^{−i})`.
pub fn lpc_to_cepstrum(alpha: &[f64]) -> Vec<f64> {
    let p = alpha.len();
    let mut c = vec![0.0; p];
    for n in 1..=p {
        let mut v = alpha[n - 1];
        for k in 1..n {
            v += (k as f64 / n as f64) * c[k - 1] * alpha[n - k - 1];
        }
        c[n - 1] = v;
    }
    c
}

/// Cepstral distance with frame counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CepstralDistance {
    pub mean: f64,
    pub frames_used: usize,
    /// Active frames dropped because linear prediction failed on either signal.
    pub frames_skipped: usize,
}

/// Frames are kept when both signals are within the energy gate of their own
/// loudest frame, which keeps the measure symmetric in its arguments.
pub fn cepstral_distance_detailed(clean: &AudioSignal, test: &AudioSignal) -> Result<CepstralDistance> {
    let prep = prepare(clean, test)?;
    let (active_c, active_t) = (active_frames(&prep.clean), active_frames(&prep.test));
    let scale = 10.0 / std::f64::consts::LN_10;

    let mut sum = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for m in (0..prep.frames).filter(|&m| active_c[m] && active_t[m]) {
        let (Some(ac), Some(at)) = (lpc(&prep.clean[m], LPC_ORDER), lpc(&prep.test[m], LPC_ORDER)) else {
            skipped += 1;
            continue;
        };
        let (cc, ct) = (lpc_to_cepstrum(&ac), lpc_to_cepstrum(&at));
        let sq: f64 = cc.iter().zip(&ct).map(|(a, b)| (a - b).powi(2)).sum();
        let d = (scale * (2.0 * sq).sqrt()).clamp(0.0, CEPSTRAL_DISTANCE_MAX);
        if d.is_finite() {
            sum += d;
            used += 1;
        } else {
            skipped += 1;
        }
    }
    if used == 0 {
        return Err(Error::NoActiveFrames);
    }
    Ok(CepstralDistance {
        mean: sum / used as f64,
        frames_used: used,
        frames_skipped: skipped,
    })
}

pub fn cepstral_distance(clean: &AudioSignal, test: &AudioSignal) -> Result<f64> {
    cepstral_distance_detailed(clean, test).map(|d| d.mean)
}

pub fn evaluate(clean: &AudioSignal, test: &AudioSignal) -> Result<MetricsReport> {
    let (fwssnr_db, frames_used) = fwssnr_detailed(clean, test)?;
    Ok(MetricsReport {
        fwssnr_db,
        cepstral_distance: cepstral_distance(clean, test)?,
        frames_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn voiced(seed: u64, secs: f64) -> AudioSignal {
        crate::signals::speech_like(seed, secs, 16_000).unwrap()
    }

    #[test]
    fn identical_signals_hit_the_ceiling_and_zero_distance() {
        let x = voiced(1, 1.5);
        let r = evaluate(&x, &x).unwrap();
        assert_eq!(r.fwssnr_db, 35.0);
        assert_eq!(r.cepstral_distance, 0.0);
        assert!(r.frames_used > 0);
    }

    #[test]
    fn white_noise_at_zero_db() {
        let x = voiced(2, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = (x.energy() / x.len() as f64).sqrt();
        let noisy: Vec<f64> = x
            .samples()
            .iter()
            .map(|v| {
                let g: f64 = StandardNormal.sample(&mut rng);
                v + p * g
            })
            .collect();
        let noisy = AudioSignal::new(noisy, 16_000).unwrap();
        let v = fwssnr(&x, &noisy).unwrap();
        assert!((-10.0..=10.0).contains(&v), "{v}");
        let cd = cepstral_distance(&x, &noisy).unwrap();
        assert!(cd > 0.0 && cd <= 10.0);
    }

    #[test]
    fn common_gain_invariance() {
        let x = voiced(4, 1.5);
        let y = crate::audio::apply_rir(&x, &crate::rir::exp_decay_rir(0.3, 16_000, 3000, 5).unwrap())
            .unwrap()
            .resized(x.len());
        let (a, b) = (fwssnr(&x, &y).unwrap(), fwssnr(&x.scaled(0.37).unwrap(), &y.scaled(0.37).unwrap()).unwrap());
        assert!((a - b).abs() <= 1e-6);
        let a = cepstral_distance(&x, &y).unwrap();
        let b = cepstral_distance(&x.scaled(0.37).unwrap(), &y.scaled(0.37).unwrap()).unwrap();
        assert!((a - b).abs() <= 1e-6, "{a} {b}");
        // a power-of-two gain is exact in floating point, so the result is too
        let c = cepstral_distance(&x.scaled(0.25).unwrap(), &y.scaled(0.25).unwrap()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn cepstral_distance_is_symmetric() {
        let x = voiced(6, 1.5);
        let y = voiced(7, 1.5);
        let (a, b) = (cepstral_distance(&x, &y).unwrap(), cepstral_distance(&y, &x).unwrap());
        assert_eq!(a, b);
        assert!(a > 0.0 && a <= 10.0);
    }

    #[test]
    fn fwssnr_is_bounded() {
        let x = voiced(8, 1.0);
        let y = voiced(9, 1.0);
        let v = fwssnr(&x, &y).unwrap();
        assert!((FWSSNR_FLOOR_DB..FWSSNR_CEILING_DB).contains(&v));
    }

    #[test]
    fn errors() {
        let x = voiced(1, 1.0);
        let y = AudioSignal::new(x.samples().to_vec(), 8_000).unwrap();
        assert!(matches!(fwssnr(&x, &y), Err(Error::SampleRateMismatch(16_000, 8_000))));
        let short = AudioSignal::new(vec![0.1; 500], 16_000).unwrap();
        assert!(matches!(fwssnr(&short, &short), Err(Error::SignalTooShort { .. })));
        assert!(matches!(cepstral_distance(&short, &short), Err(Error::SignalTooShort { .. })));
        let silent = AudioSignal::zeros(8000, 16_000).unwrap();
        assert!(matches!(fwssnr(&silent, &x), Err(Error::NoActiveFrames)));
    }

    #[test]
    fn lpc_recovers_an_ar2_process() {
        // x[n] = 1.3 x[n-1] - 0.6 x[n-2] + e[n]
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut x = vec![0.0; 20_000];
        for n in 2..x.len() {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[n] = 1.3 * x[n - 1] - 0.6 * x[n - 2] + e;
        }
        let a = lpc(&x, 2).unwrap();
        assert!((a[0] - 1.3).abs() < 0.02 && (a[1] + 0.6).abs() < 0.02);
        assert!(lpc(&[0.0; 50], 10).is_none());
    }

    #[test]
    fn cepstrum_of_a_single_pole() {
        // 1/(1 − a z^-1) has cepstrum c_n = a^n / n
        let a = 0.7;
        let mut alpha = vec![0.0; 6];
        alpha[0] = a;
        let c = lpc_to_cepstrum(&alpha);
        for (n, v) in c.iter().enumerate() {
            let n = n as f64 + 1.0;
            assert!((v - a.powf(n) / n).abs() < 1e-14);
        }
    }

    #[test]
    fn report_formats() {
        let r = MetricsReport {
            fwssnr_db: 4.5,
            cepstral_distance: 3.25,
            frames_used: 97,
        };
        assert_eq!(r.to_key_values(), "fwssnr_db=4.500000\ncepstral_distance=3.250000\nframes_used=97\n");
        assert_eq!(r.csv_row("a.wav"), "a.wav,4.500000,3.250000,97");
        assert_eq!(MetricsReport::CSV_HEADER.split(',').count(), 4);
    }

    #[test]
    fn band_layout() {
        let filters = critical_band_filters(16_000, 1024);
        assert_eq!(filters.len(), 25);
        // every band has support and band centres increase
        let centres: Vec<usize> = filters
            .iter()
            .map(|f| (0..f.len()).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap())
            .collect();
        assert!(centres.windows(2).all(|w| w[0] < w[1]));
        assert!((hz_to_bark(bark_to_hz(7.5)) - 7.5).abs() < 1e-12);
    }
}
