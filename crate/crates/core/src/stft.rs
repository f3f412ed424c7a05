//! Short-time Fourier analysis with a unit-ℓ1 Hann window, and weighted
//! overlap-add synthesis.
//!
//! Frame `n` covers samples `[n·hop, n·hop + window_len)`, with no centering.
//! A final partial frame is zero-padded so every input sample lies under at
//! least one window. Only bins `0..=window_len/2` are kept.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    #[default]
    Hann,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
        }
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            other => Err(Error::InvalidConfig(format!("unknown window `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    window_len: usize,
    hop: usize,
    window_kind: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 512,
            hop: 256,
            window_kind: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        if window_len < 2 || !window_len.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "window length must be a positive even integer, got {window_len}"
            )));
        }
        if hop == 0 || hop > window_len {
            return Err(Error::InvalidConfig(format!(
                "hop must be in 1..={window_len}, got {hop}"
            )));
        }
        Ok(Self {
            window_len,
            hop,
            window_kind: WindowKind::Hann,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window_kind(&self) -> WindowKind {
        self.window_kind
    }

    /// Bins from DC up to Nyquist.
    pub fn num_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// Frames needed so that the union of window supports covers `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len <= self.window_len {
            1
        } else {
            (len - self.window_len).div_ceil(self.hop) + 1
        }
    }

    /// Periodic Hann window scaled to unit ℓ1 norm.
    pub fn window(&self) -> Vec<f64> {
        let m = self.window_len as f64;
        let raw: Vec<f64> = (0..self.window_len)
            .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / m).cos()))
            .collect();
        let norm: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / norm).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Array2<Complex64>,
    config: StftConfig,
    sample_rate: u32,
    signal_len: usize,
}

impl ComplexSpectrogram {
    /// `signal_len` is the length `synthesize` trims its output to.
    pub fn new(
        data: Array2<Complex64>,
        config: StftConfig,
        sample_rate: u32,
        signal_len: usize,
    ) -> Result<Self> {
        if data.nrows() != config.num_bins() {
            return Err(Error::dims(format!(
                "spectrogram has {} rows, window of {} needs {}",
                data.nrows(),
                config.window_len(),
                config.num_bins()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numerical("non-finite STFT coefficient"));
        }
        Ok(Self {
            data,
            config,
            sample_rate,
            signal_len,
        })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn num_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_frames(&self) -> usize {
        self.data.ncols()
    }

    /// Same frame geometry and metadata, different coefficients.
    pub fn with_data(&self, data: Array2<Complex64>) -> Result<Self> {
        if data.dim() != self.data.dim() {
            return Err(Error::dims(format!(
                "replacement data {:?} does not match {:?}",
                data.dim(),
                self.data.dim()
            )));
        }
        Self::new(data, self.config, self.sample_rate, self.signal_len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    data: Array2<f64>,
    config: StftConfig,
    sample_rate: u32,
}

impl PowerSpectrogram {
    pub fn new(data: Array2<f64>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        if data.nrows() != config.num_bins() {
            return Err(Error::dims(format!(
                "power spectrogram has {} rows, expected {}",
                data.nrows(),
                config.num_bins()
            )));
        }
        if data.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::numerical("power spectrogram entries must be finite and nonnegative"));
        }
        Ok(Self {
            data,
            config,
            sample_rate,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_frames(&self) -> usize {
        self.data.ncols()
    }

    /// Tab-separated text dump, one row per frequency bin, preceded by
    /// `# K N sample_rate window_len hop`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# {} {} {} {} {}",
            self.num_bins(),
            self.num_frames(),
            self.sample_rate,
            self.config.window_len(),
            self.config.hop()
        )?;
        let mut line = String::new();
        for row in self.data.rows() {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push('\t');
                }
                write!(line, "{v}").expect("writing to a String");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let bad = |what: &str| Error::MalformedFile(format!("spectrogram dump: {what}"));
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))??;
        let fields: Vec<usize> = header
            .strip_prefix('#')
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("non-integer header field"))?;
        let [k, n, sample_rate, window_len, hop] = fields[..] else {
            return Err(bad("header needs 5 fields"));
        };
        let config = StftConfig::new(window_len, hop)?;
        let mut data = Array2::zeros((k, n));
        for row in 0..k {
            let line = lines.next().ok_or_else(|| bad("too few rows"))??;
            let values: Vec<f64> = line
                .split('\t')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("non-numeric entry"))?;
            if values.len() != n {
                return Err(bad("row length does not match header"));
            }
            data.row_mut(row).assign(&ndarray::Array1::from(values));
        }
        let sample_rate = u32::try_from(sample_rate).map_err(|_| bad("sample rate out of range"))?;
        Self::new(data, config, sample_rate)
    }
}

/// Discrete STFT of `signal`.
pub fn analyze(signal: &AudioSignal, config: &StftConfig) -> Result<ComplexSpectrogram> {
    let len = signal.len();
    let wlen = config.window_len();
    if len < wlen {
        return Err(Error::SignalTooShort { len, needed: wlen });
    }
    let window = config.window();
    let frames = config.num_frames(len);
    let bins = config.num_bins();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(wlen);
    let samples = signal.samples();

    let mut data = Array2::<Complex64>::zeros((bins, frames));
    let mut buf = vec![Complex64::default(); wlen];
    for n in 0..frames {
        let start = n * config.hop();
        for (m, slot) in buf.iter_mut().enumerate() {
            let x = samples.get(start + m).copied().unwrap_or(0.0);
            *slot = Complex64::new(x * window[m], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..bins {
            data[[k, n]] = buf[k];
        }
    }
    ComplexSpectrogram::new(data, *config, signal.sample_rate(), len)
}

/// Weighted overlap-add inverse of [`analyze`]: each inverse frame is multiplied by the
/// analysis window and the sum is divided by the summed squared-window envelope.
pub fn synthesize(spec: &ComplexSpectrogram) -> Result<AudioSignal> {
    let config = spec.config();
    let wlen = config.window_len();
    let hop = config.hop();
    let bins = spec.num_bins();
    let frames = spec.num_frames();
    let window = config.window();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(wlen);

    let total = (frames - 1) * hop + wlen;
    let mut acc = vec![0.0; total];
    let mut envelope = vec![0.0; total];
    let mut buf = vec![Complex64::default(); wlen];
    for n in 0..frames {
        buf[..bins].copy_from_slice(&spec.data().column(n).to_vec());
        // Hermitian completion for a real frame
        for k in bins..wlen {
            buf[k] = buf[wlen - k].conj();
        }
        buf[0].im = 0.0;
        buf[wlen / 2].im = 0.0;
        ifft.process(&mut buf);
        let start = n * hop;
        for m in 0..wlen {
            let frame_sample = buf[m].re / wlen as f64;
            acc[start + m] += frame_sample * window[m];
            envelope[start + m] += window[m] * window[m];
        }
    }
    let floor = 1e-8 * envelope.iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut samples: Vec<f64> = acc
        .iter()
        .zip(&envelope)
        .map(|(a, e)| if *e > floor { a / e } else { a / floor.max(f64::MIN_POSITIVE) })
        .collect();
    samples.resize(spec.signal_len(), 0.0);
    AudioSignal::new(samples, spec.sample_rate())
}

/// Element-wise squared magnitude.
pub fn power(spec: &ComplexSpectrogram) -> PowerSpectrogram {
    PowerSpectrogram {
        data: spec.data().mapv(|z| z.norm_sqr()),
        config: *spec.config(),
        sample_rate: spec.sample_rate(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise(len: usize, seed: u64) -> AudioSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioSignal::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16_000).unwrap()
    }

    fn interior_rel_err(a: &[f64], b: &[f64], skip: usize) -> f64 {
        let end = a.len() - skip;
        let num: f64 = (skip..end).map(|i| (a[i] - b[i]).powi(2)).sum();
        let den: f64 = (skip..end).map(|i| b[i].powi(2)).sum();
        (num / den).sqrt()
    }

    /// Naive DFT of a windowed frame, independent of the FFT path.
    fn direct_dft_bin(frame: &[f64], k: usize) -> Complex64 {
        let m = frame.len() as f64;
        frame
            .iter()
            .enumerate()
            .map(|(t, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * t as f64 / m))
            .sum()
    }

    #[test]
    fn config_validation() {
        assert!(StftConfig::new(511, 256).is_err());
        assert!(StftConfig::new(512, 0).is_err());
        assert!(StftConfig::new(512, 513).is_err());
        let c = StftConfig::default();
        assert_eq!((c.window_len(), c.hop(), c.num_bins()), (512, 256, 257));
    }

    #[test]
    fn window_has_unit_l1_norm() {
        for (w, h) in [(512, 256), (64, 16), (6, 3)] {
            let win = StftConfig::new(w, h).unwrap().window();
            let l1: f64 = win.iter().map(|x| x.abs()).sum();
            assert!((l1 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn frame_count_covers_the_signal() {
        let c = StftConfig::default();
        assert_eq!(c.num_frames(512), 1);
        assert_eq!(c.num_frames(768), 2);
        assert_eq!(c.num_frames(769), 3);
        assert_eq!(c.num_frames(16_000), 62);
        let n = c.num_frames(16_000);
        assert!((n - 1) * 256 + 512 >= 16_000);
    }

    #[test]
    fn too_short_signal() {
        let s = AudioSignal::zeros(100, 16_000).unwrap();
        assert!(matches!(
            analyze(&s, &StftConfig::default()),
            Err(Error::SignalTooShort { len: 100, needed: 512 })
        ));
    }

    #[test]
    fn zero_signal_gives_zero_spectrogram_and_back() {
        let s = AudioSignal::zeros(4000, 16_000).unwrap();
        let spec = analyze(&s, &StftConfig::default()).unwrap();
        assert!(spec.data().iter().all(|z| z.norm() == 0.0));
        let back = synthesize(&spec).unwrap();
        assert_eq!(back.len(), 4000);
        assert!(back.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_signal_concentrates_in_dc() {
        let s = AudioSignal::new(vec![0.7; 4096], 16_000).unwrap();
        let config = StftConfig::default();
        let spec = analyze(&s, &config).unwrap();
        // the last frame is zero-padded; only full frames are checked
        let full = (4096 - 512) / 256 + 1;
        for n in 0..full {
            let dc = spec.data()[[0, n]].norm();
            let frame: Vec<f64> = config.window().iter().map(|w| 0.7 * w).collect();
            assert!((dc - direct_dft_bin(&frame, 0).norm()).abs() < 1e-12);
            for k in 2..config.num_bins() {
                let db = 20.0 * (spec.data()[[k, n]].norm() / dc).log10();
                assert!(db < -60.0, "bin {k} frame {n}: {db} dB");
            }
        }
    }

    #[test]
    fn bin_centred_sinusoid_peaks_at_its_bin() {
        let config = StftConfig::default();
        let k0 = 37;
        let f = k0 as f64 * 16_000.0 / 512.0;
        let x: Vec<f64> = (0..8000).map(|t| (2.0 * PI * f * t as f64 / 16_000.0).sin()).collect();
        let spec = analyze(&AudioSignal::new(x.clone(), 16_000).unwrap(), &config).unwrap();
        let win = config.window();
        for n in 0..(8000 - 512) / 256 + 1 {
            let col = spec.data().column(n);
            let peak = (0..col.len())
                .max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm()))
                .unwrap();
            assert_eq!(peak, k0);
            let frame: Vec<f64> = (0..512).map(|m| x[n * 256 + m] * win[m]).collect();
            assert!((col[k0] - direct_dft_bin(&frame, k0)).norm() < 1e-10);
        }
    }

    #[test]
    fn noise_round_trip_interior() {
        let x = noise(16_000, 3);
        let spec = analyze(&x, &StftConfig::default()).unwrap();
        let y = synthesize(&spec).unwrap();
        assert_eq!(y.len(), x.len());
        assert!(interior_rel_err(y.samples(), x.samples(), 512) <= 1e-6);
    }

    #[test]
    fn tone_round_trip_interior() {
        let x: Vec<f64> = (0..16_000)
            .map(|t| 0.5 * (2.0 * PI * 440.0 * t as f64 / 16_000.0).sin())
            .collect();
        let x = AudioSignal::new(x, 16_000).unwrap();
        let y = synthesize(&analyze(&x, &StftConfig::default()).unwrap()).unwrap();
        assert!(interior_rel_err(y.samples(), x.samples(), 512) <= 1e-6);
    }

    #[test]
    fn power_of_three_four_is_twenty_five() {
        let config = StftConfig::new(2, 1).unwrap();
        let data = Array2::from_shape_vec((2, 1), vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0)]).unwrap();
        let spec = ComplexSpectrogram::new(data, config, 16_000, 2).unwrap();
        let p = power(&spec);
        assert_eq!(p.data()[[0, 0]], 25.0);
        assert_eq!(p.data()[[1, 0]], 0.0);
    }

    #[test]
    fn power_ignores_global_phase() {
        let spec = analyze(&noise(3000, 9), &StftConfig::default()).unwrap();
        let rot = Complex64::from_polar(1.0, 1.234);
        let rotated = spec.with_data(spec.data().mapv(|z| z * rot)).unwrap();
        let (a, b) = (power(&spec), power(&rotated));
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
        }
    }

    #[test]
    fn analysis_is_linear() {
        let config = StftConfig::default();
        let (x, y) = (noise(5000, 1), noise(5000, 2));
        let (a, b) = (0.7, -2.3);
        let mix: Vec<f64> = x.samples().iter().zip(y.samples()).map(|(p, q)| a * p + b * q).collect();
        let lhs = analyze(&AudioSignal::new(mix, 16_000).unwrap(), &config).unwrap();
        let (sx, sy) = (analyze(&x, &config).unwrap(), analyze(&y, &config).unwrap());
        let mut num = 0.0;
        let mut den = 0.0;
        for ((l, p), q) in lhs.data().iter().zip(sx.data()).zip(sy.data()) {
            let r = p * a + q * b;
            num += (l - r).norm_sqr();
            den += r.norm_sqr();
        }
        assert!((num / den).sqrt() <= 1e-9);
    }

    #[test]
    fn hop_shift_moves_interior_frames_by_one_column() {
        let config = StftConfig::default();
        let x = noise(8192, 5);
        let mut shifted = vec![0.0; 256];
        shifted.extend_from_slice(x.samples());
        let shifted = AudioSignal::new(shifted, 16_000).unwrap();
        let (p, q) = (
            power(&analyze(&x, &config).unwrap()),
            power(&analyze(&shifted, &config).unwrap()),
        );
        let full = (8192 - 512) / 256 + 1;
        let mut total_p = 0.0;
        let mut total_q = 0.0;
        for n in 0..full {
            for k in 0..config.num_bins() {
                let (a, b) = (p.data()[[k, n]], q.data()[[k, n + 1]]);
                assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
                total_p += a;
                total_q += b;
            }
        }
        assert!(((total_p - total_q) / total_p).abs() <= 1e-6);
    }

    #[test]
    fn text_dump_round_trip() {
        let p = power(&analyze(&noise(2000, 4), &StftConfig::new(64, 32).unwrap()).unwrap());
        let mut buf = Vec::new();
        p.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("# 33 {} 16000 64 32\n", p.num_frames())));
        assert_eq!(text.lines().nth(1).unwrap().split('\t').count(), p.num_frames());
        let back = PowerSpectrogram::read_text(&buf[..]).unwrap();
        assert_eq!(back, p);
        assert!(PowerSpectrogram::read_text(&b"# 3 2 16000\n"[..]).is_err());
    }
}
