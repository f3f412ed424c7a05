//! Synthetic room impulse responses: the image-source method for shoebox rooms
//! and seeded exponentially decaying noise. Also Schroeder backward integration
//! for estimating the reverberation time of a response.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// Half-width, in samples, of the windowed-sinc fractional delay kernel.
pub const SINC_HALF_WIDTH: usize = 32;

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Wall behaviour, uniform over all six walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallAbsorption {
    /// Target reverberation time in seconds. See [`calibrated_reflection`].
    T60(f64),
    /// Pressure reflection coefficient in `[0, 1)`.
    Reflection(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomSpec {
    /// Room size along x, y, z in metres.
    pub dimensions: [f64; 3],
    pub source: [f64; 3],
    pub mic: [f64; 3],
    pub absorption: WallAbsorption,
    /// Maximum number of reflections per axis; `None` keeps every image that
    /// arrives within the response length.
    pub max_order: Option<usize>,
    pub sample_rate: u32,
    pub speed_of_sound: f64,
}

impl RoomSpec {
    pub fn new(
        dimensions: [f64; 3],
        source: [f64; 3],
        mic: [f64; 3],
        absorption: WallAbsorption,
        sample_rate: u32,
    ) -> Self {
        Self {
            dimensions,
            source,
            mic,
            absorption,
            max_order: None,
            sample_rate,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if self.dimensions.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad(format!("room dimensions must be positive, got {:?}", self.dimensions));
        }
        for (name, p) in [("source", self.source), ("mic", self.mic)] {
            let inside = p
                .iter()
                .zip(&self.dimensions)
                .all(|(&v, &d)| v > 0.0 && v < d);
            if !inside {
                return bad(format!("{name} {p:?} is not strictly inside the room {:?}", self.dimensions));
            }
        }
        if self.direct_distance() == 0.0 {
            return bad("source and mic coincide".into());
        }
        match self.absorption {
            WallAbsorption::T60(t) if !(t > 0.0 && t.is_finite()) => {
                return bad(format!("T60 must be positive, got {t}"))
            }
            WallAbsorption::Reflection(r) if !(0.0..1.0).contains(&r) => {
                return bad(format!("reflection coefficient must lie in [0, 1), got {r}"))
            }
            _ => {}
        }
        if self.sample_rate == 0 {
            return bad("sample rate must be positive".into());
        }
        if !(self.speed_of_sound > 0.0 && self.speed_of_sound.is_finite()) {
            return bad(format!("speed of sound must be positive, got {}", self.speed_of_sound));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.dimensions.iter().product()
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + x * z + y * z)
    }

    pub fn direct_distance(&self) -> f64 {
        distance(self.source, self.mic)
    }

    /// Direct-path delay in (fractional) samples.
    pub fn direct_delay(&self) -> f64 {
        self.direct_distance() * self.sample_rate as f64 / self.speed_of_sound
    }

    /// The given coefficient, or Sabine's value for a T60 target. Image-method
    /// responses for a T60 target use [`calibrated_reflection`] instead.
    pub fn reflection_coeff(&self) -> f64 {
        match self.absorption {
            WallAbsorption::Reflection(r) => r,
            WallAbsorption::T60(t60) => sabine_reflection(self.volume(), self.surface_area(), t60),
        }
    }

    /// Sabine reverberation time implied by the wall reflection coefficient.
    pub fn nominal_t60(&self) -> f64 {
        match self.absorption {
            WallAbsorption::T60(t) => t,
            WallAbsorption::Reflection(r) => {
                let alpha = 1.0 - r * r;
                0.161 * self.volume() / (alpha * self.surface_area())
            }
        }
    }

    /// A response length that covers the direct path, the sinc tail and 1.2 × T60.
    pub fn default_length(&self) -> usize {
        let decay = (1.2 * self.nominal_t60() * self.sample_rate as f64).ceil() as usize;
        let direct = self.direct_delay().ceil() as usize + SINC_HALF_WIDTH + 1;
        decay.max(direct)
    }
}

/// `r = sqrt(1 − 0.161·V / (T60·A))`, clamped to `[0, 0.999]`.
pub fn sabine_reflection(volume: f64, area: f64, t60: f64) -> f64 {
    let alpha = 0.161 * volume / (t60 * area);
    (1.0 - alpha).max(0.0).sqrt().clamp(0.0, 0.999)
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Image offsets along one axis relative to the mic, with their reflection counts.
fn axis_images(source: f64, mic: f64, size: f64, reach: f64, max_order: Option<usize>) -> Vec<(f64, i32)> {
    let span = (reach / (2.0 * size)).ceil() as i64 + 1;
    let mut out = Vec::new();
    for m in -span..=span {
        for q in 0..=1i64 {
            let offset = (1 - 2 * q) as f64 * source - mic + 2.0 * m as f64 * size;
            let reflections = ((m - q).abs() + m.abs()) as usize;
            if max_order.is_some_and(|limit| reflections > limit) || offset.abs() > reach {
                continue;
            }
            out.push((offset, reflections as i32));
        }
    }
    out
}

/// Adds `amplitude` at fractional position `delay` using a Hann-windowed sinc.
fn add_fractional_impulse(out: &mut [f64], delay: f64, amplitude: f64) {
    let half = SINC_HALF_WIDTH as f64;
    let first = (delay - half).ceil().max(0.0) as i64;
    let last = ((delay + half).floor() as i64).min(out.len() as i64 - 1);
    if first > last {
        return;
    }
    let x0 = first as f64 - delay;
    // sin(π(x0 + j)) = (−1)^j·sin(π·x0); the window phase advances by π/half per tap
    let sin0 = (PI * x0).sin();
    let (step_sin, step_cos) = (PI / half).sin_cos();
    let (mut wsin, mut wcos) = (PI * x0 / half).sin_cos();
    for (j, i) in (first..=last).enumerate() {
        let x = x0 + j as f64;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * sin0 / (PI * x)
        };
        let window = if x.abs() < half { 0.5 * (1.0 + wcos) } else { 0.0 };
        out[i as usize] += amplitude * sinc * window;
        let next_cos = wcos * step_cos - wsin * step_sin;
        wsin = wsin * step_cos + wcos * step_sin;
        wcos = next_cos;
    }
}

/// Image-source response of a shoebox room. Each image with `ρ` total reflections
/// at distance `d` contributes `r^ρ / (4π·d)` at delay `d/c`.
pub fn image_method_rir(room: &RoomSpec, length: usize) -> Result<AudioSignal> {
    room.validate()?;
    let r = match room.absorption {
        WallAbsorption::Reflection(r) => r,
        WallAbsorption::T60(_) => calibrated_reflection(room)?,
    };
    AudioSignal::new(image_sum(room, r, length), room.sample_rate)
}

/// Wall reflection coefficient that gives the room's target T60.
///
/// Sabine's formula assumes a diffuse field. A shoebox with uniform walls is not
/// diffuse: paths close to the axes meet few walls, so the late image-method decay
/// is slower than Sabine predicts (25-50% longer for ordinary rooms). Starting
/// from Sabine's value, the coefficient is corrected with `−ln r ∝ 1/T60` until
/// the Schroeder T60 of the simulated response is within 1% of the target.
pub fn calibrated_reflection(room: &RoomSpec) -> Result<f64> {
    room.validate()?;
    let WallAbsorption::T60(target) = room.absorption else {
        return Ok(room.reflection_coeff());
    };
    let mut r = room.reflection_coeff();
    if r <= 0.0 {
        return Ok(r);
    }
    let length = room.default_length();
    for _ in 0..CALIBRATION_STEPS {
        let Some(measured) = schroeder_t60(&image_sum(room, r, length), room.sample_rate) else {
            break;
        };
        let ratio = measured / target;
        if (ratio - 1.0).abs() <= 0.01 {
            break;
        }
        r = (r.ln() * ratio).exp().clamp(0.0, 0.999);
    }
    Ok(r)
}

const CALIBRATION_STEPS: usize = 8;

fn image_sum(room: &RoomSpec, r: f64, length: usize) -> Vec<f64> {
    let fs = room.sample_rate as f64;
    let c = room.speed_of_sound;
    let reach = (length + SINC_HALF_WIDTH) as f64 * c / fs;
    let axes: Vec<Vec<(f64, i32)>> = (0..3)
        .map(|a| axis_images(room.source[a], room.mic[a], room.dimensions[a], reach, room.max_order))
        .collect();

    let mut out = vec![0.0; length];
    let reach_sq = reach * reach;
    for &(dx, rx) in &axes[0] {
        for &(dy, ry) in &axes[1] {
            let dxy = dx * dx + dy * dy;
            if dxy > reach_sq {
                continue;
            }
            for &(dz, rz) in &axes[2] {
                let d_sq = dxy + dz * dz;
                if d_sq > reach_sq {
                    continue;
                }
                let d = d_sq.sqrt();
                let gain = r.powi(rx + ry + rz) / (4.0 * PI * d);
                if gain == 0.0 {
                    continue;
                }
                add_fractional_impulse(&mut out, d * fs / c, gain);
            }
        }
    }
    out
}

/// `h[n] = g[n]·exp(−3·ln(10)·n / (T60·fs))` with seeded unit-variance Gaussian
/// `g`, and `h[0] = 1`.
pub fn exp_decay_rir(t60: f64, sample_rate: u32, length: usize, seed: u64) -> Result<AudioSignal> {
    if !(t60 > 0.0 && t60.is_finite()) {
        return Err(Error::InvalidConfig(format!("T60 must be positive, got {t60}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = 3.0 * std::f64::consts::LN_10 / (t60 * sample_rate as f64);
    let mut h: Vec<f64> = (0..length)
        .map(|n| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * (-rate * n as f64).exp()
        })
        .collect();
    if let Some(first) = h.first_mut() {
        *first = 1.0;
    }
    AudioSignal::new(h, sample_rate)
}

/// Schroeder backward-integrated energy decay curve in dB relative to the total energy.
pub fn energy_decay_curve(h: &[f64]) -> Vec<f64> {
    let mut tail = vec![0.0; h.len()];
    let mut acc = 0.0;
    for i in (0..h.len()).rev() {
        acc += h[i] * h[i];
        tail[i] = acc;
    }
    let total = acc;
    tail.into_iter()
        .map(|e| if total > 0.0 && e > 0.0 { 10.0 * (e / total).log10() } else { f64::NEG_INFINITY })
        .collect()
}

/// T60 from a least-squares line through the decay curve between −5 dB and −25 dB,
/// extrapolated to −60 dB. `None` if the curve never reaches −25 dB.
pub fn schroeder_t60(h: &[f64], sample_rate: u32) -> Option<f64> {
    let edc = energy_decay_curve(h);
    let start = edc.iter().position(|&v| v <= -5.0)?;
    let end = edc.iter().position(|&v| v <= -25.0)?;
    if end <= start + 1 {
        return None;
    }
    let fs = sample_rate as f64;
    let n = (end - start + 1) as f64;
    let (mut st, mut sv, mut stt, mut stv) = (0.0, 0.0, 0.0, 0.0);
    for (i, &v) in edc.iter().enumerate().take(end + 1).skip(start) {
        let t = i as f64 / fs;
        st += t;
        sv += v;
        stt += t * t;
        stv += t * v;
    }
    let slope = (n * stv - st * sv) / (n * stt - st * st);
    (slope < 0.0).then(|| -60.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(absorption: WallAbsorption) -> RoomSpec {
        RoomSpec::new([6.0, 4.0, 3.0], [1.0, 1.0, 1.5], [4.0, 2.0, 1.5], absorption, 16_000)
    }

    fn energy(h: &AudioSignal) -> f64 {
        h.samples().iter().map(|v| v * v).sum()
    }

    #[test]
    fn geometry_validation() {
        let mut r = room(WallAbsorption::T60(0.4));
        assert!(r.validate().is_ok());
        r.source = [7.0, 1.0, 1.0];
        assert!(matches!(r.validate(), Err(Error::InvalidGeometry(_))));
        r.source = r.mic;
        assert!(r.validate().is_err());
        let mut r = room(WallAbsorption::Reflection(1.0));
        assert!(r.validate().is_err());
        r.absorption = WallAbsorption::T60(-1.0);
        assert!(r.validate().is_err());
        r.absorption = WallAbsorption::T60(0.3);
        r.dimensions = [0.0, 4.0, 3.0];
        assert!(image_method_rir(&r, 100).is_err());
    }

    #[test]
    fn sabine_conversion() {
        // V = 72, A = 108
        let r = sabine_reflection(72.0, 108.0, 0.45);
        let alpha: f64 = 0.161 * 72.0 / (0.45 * 108.0);
        assert!((r - (1.0 - alpha).sqrt()).abs() < 1e-15);
        assert_eq!(sabine_reflection(72.0, 108.0, 0.01), 0.0);
        assert_eq!(sabine_reflection(72.0, 108.0, 1e6), 0.999);
        let spec = room(WallAbsorption::Reflection(r));
        assert!((spec.nominal_t60() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn order_zero_is_the_direct_path() {
        // 3.43 m at 343 m/s and 16 kHz: exactly 160 samples
        let mut r = RoomSpec::new(
            [6.0, 4.0, 3.0],
            [1.0, 2.0, 1.5],
            [4.43, 2.0, 1.5],
            WallAbsorption::Reflection(0.9),
            16_000,
        );
        r.max_order = Some(0);
        let h = image_method_rir(&r, 1000).unwrap();
        let d = r.direct_distance();
        let peak = (0..h.len())
            .max_by(|&a, &b| h.samples()[a].abs().total_cmp(&h.samples()[b].abs()))
            .unwrap();
        assert_eq!(peak, (d * 16_000.0 / 343.0).round() as usize);
        assert!((h.samples()[peak] - 1.0 / (4.0 * PI * d)).abs() < 1e-12);
        let rest: f64 = h.samples().iter().enumerate().filter(|(i, _)| *i != peak).map(|(_, v)| v.abs()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn order_zero_fractional_delay_peaks_at_rounded_delay() {
        let mut r = room(WallAbsorption::Reflection(0.8));
        r.max_order = Some(0);
        let h = image_method_rir(&r, 1000).unwrap();
        let peak = (0..h.len())
            .max_by(|&a, &b| h.samples()[a].abs().total_cmp(&h.samples()[b].abs()))
            .unwrap();
        assert_eq!(peak, r.direct_delay().round() as usize);
        let expected = 1.0 / (4.0 * PI * r.direct_distance());
        assert!(h.samples()[peak] > 0.6 * expected && h.samples()[peak] <= expected * 1.0001);
    }

    #[test]
    fn reciprocity() {
        let mut a = room(WallAbsorption::Reflection(0.85));
        a.max_order = Some(6);
        let mut b = a.clone();
        std::mem::swap(&mut b.source, &mut b.mic);
        let (ha, hb) = (image_method_rir(&a, 4000).unwrap(), image_method_rir(&b, 4000).unwrap());
        for (x, y) in ha.samples().iter().zip(hb.samples()) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn energy_grows_with_reflection_coefficient() {
        let energies: Vec<f64> = [0.0, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&r| {
                let mut spec = room(WallAbsorption::Reflection(r));
                spec.max_order = Some(10);
                energy(&image_method_rir(&spec, 4000).unwrap())
            })
            .collect();
        for w in energies.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn raising_the_order_cap_converges() {
        let spec = RoomSpec::new(
            [4.0, 3.5, 3.0],
            [1.0, 1.0, 1.2],
            [2.8, 2.4, 1.6],
            WallAbsorption::Reflection(sabine_reflection(42.0, 73.0, 0.3)),
            16_000,
        );
        let length = spec.default_length();
        let base = (343.0 * 0.3 / 3.0_f64).ceil() as usize;
        let with = |order| {
            let mut s = spec.clone();
            s.max_order = Some(order);
            energy(&image_method_rir(&s, length).unwrap())
        };
        let (e1, e2) = (with(base), with(2 * base));
        assert!(((e2 - e1) / e2).abs() < 0.01);
    }

    #[test]
    fn image_method_t60_is_close_to_target() {
        let spec = room(WallAbsorption::T60(0.45));
        let h = image_method_rir(&spec, spec.default_length()).unwrap();
        let t = schroeder_t60(h.samples(), 16_000).unwrap();
        assert!((t - 0.45).abs() <= 0.2 * 0.45, "estimated {t}");
    }

    #[test]
    fn calibration_lowers_the_sabine_coefficient() {
        let spec = room(WallAbsorption::T60(0.45));
        let r = calibrated_reflection(&spec).unwrap();
        assert!(r < spec.reflection_coeff());
        let fixed = room(WallAbsorption::Reflection(0.7));
        assert_eq!(calibrated_reflection(&fixed).unwrap(), 0.7);
        // a target far below what the room can do clamps to anechoic
        let dead = room(WallAbsorption::T60(0.01));
        assert_eq!(calibrated_reflection(&dead).unwrap(), 0.0);
    }

    #[test]
    fn exp_decay_envelope_and_determinism() {
        let h = exp_decay_rir(0.5, 16_000, 20_000, 7).unwrap();
        assert_eq!(h.samples()[0], 1.0);
        assert_eq!(h, exp_decay_rir(0.5, 16_000, 20_000, 7).unwrap());
        assert_ne!(h, exp_decay_rir(0.5, 16_000, 20_000, 8).unwrap());
        let rate = 3.0 * std::f64::consts::LN_10 / (0.5 * 16_000.0);
        assert!(((-rate * 8000.0f64).exp() - 1e-3).abs() < 1e-15);
        assert!(exp_decay_rir(0.0, 16_000, 10, 0).is_err());
    }

    #[test]
    fn exp_decay_schroeder_slope() {
        for (t60, seed) in [(0.3, 1), (0.45, 2), (0.6, 3), (0.75, 4)] {
            let len = (2.0 * t60 * 16_000.0) as usize;
            let h = exp_decay_rir(t60, 16_000, len, seed).unwrap();
            let est = schroeder_t60(h.samples(), 16_000).unwrap();
            assert!((est - t60).abs() <= 0.1 * t60, "t60 {t60}: estimated {est}");
        }
    }

    #[test]
    fn decay_curve_of_silence() {
        assert!(schroeder_t60(&[0.0; 100], 16_000).is_none());
        let edc = energy_decay_curve(&[1.0, 0.0, 0.0]);
        assert_eq!(edc[0], 0.0);
        assert_eq!(edc[1], f64::NEG_INFINITY);
    }
}
