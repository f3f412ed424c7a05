//! Corpus sweep: reverberate each dry signal at several reverberation times,
//! dereverberate, and score both versions against the dry reference.
//!
//! The room grid is a fixed shoebox with seeded jitter on the source and mic
//! positions. Every (file, T60) job gets its own random stream, so results do
//! not depend on how jobs are scheduled.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use reverbkit::{
    apply_rir, dereverberate, evaluate, image_method_rir, AudioSignal, DereverbConfig, MetricsReport, RoomSpec,
    WallAbsorption,
};

/// Peak level of simulated reverberant audio.
pub const REVERBERANT_PEAK: f64 = 0.9;

pub const CSV_HEADER: &str = "t60,fwssnr_rev_mean,fwssnr_rev_std,fwssnr_der_mean,fwssnr_der_std,\
cd_rev_mean,cd_rev_std,cd_der_mean,cd_der_std,n";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub room: [f64; 3],
    pub source: [f64; 3],
    pub mic: [f64; 3],
    /// Half-width of the uniform jitter applied to every source and mic coordinate.
    pub jitter: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            room: [6.0, 4.0, 3.0],
            source: [1.5, 1.2, 1.5],
            mic: [4.0, 2.5, 1.6],
            jitter: 0.1,
        }
    }
}

impl Geometry {
    /// The room for one job, with source and mic jittered by `rng`.
    pub fn sample(&self, t60: f64, sample_rate: u32, rng: &mut impl Rng) -> RoomSpec {
        let mut jittered = |p: [f64; 3]| {
            p.map(|v| {
                if self.jitter > 0.0 {
                    v + rng.random_range(-self.jitter..=self.jitter)
                } else {
                    v
                }
            })
        };
        let (source, mic) = (jittered(self.source), jittered(self.mic));
        RoomSpec::new(self.room, source, mic, WallAbsorption::T60(t60), sample_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlan {
    pub t60s: Vec<f64>,
    pub seed: u64,
    pub geometry: Geometry,
    pub config: DereverbConfig,
}

/// Scores of the reverberant input and of the dereverberated output, both against the dry signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionScores {
    pub reverberant: MetricsReport,
    pub dereverberated: MetricsReport,
}

/// Reverberates `dry` in `room`, dereverberates it, and scores both signals.
///
/// The reverberant signal is peak-normalized to [`REVERBERANT_PEAK`]. Before
/// scoring, both signals are advanced by the position of the response's
/// largest tap and cut to the dry length, which removes the direct-path delay.
pub fn run_condition(dry: &AudioSignal, room: &RoomSpec, config: &DereverbConfig) -> reverbkit::Result<ConditionScores> {
    let rir = image_method_rir(room, room.default_length())?;
    let wet = apply_rir(dry, &rir)?.peak_normalized(REVERBERANT_PEAK)?;
    let out = dereverberate(&wet, config)?;
    let offset = peak_index(rir.samples());
    let align = |s: &AudioSignal| s.advanced(offset).resized(dry.len());
    Ok(ConditionScores {
        reverberant: evaluate(dry, &align(&wet))?,
        dereverberated: evaluate(dry, &align(&out.signal))?,
    })
}

fn peak_index(h: &[f64]) -> usize {
    h.iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .map_or(0, |(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (zero for a single value, NaN for none).
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRow {
    pub t60: f64,
    pub fwssnr_rev: Summary,
    pub fwssnr_der: Summary,
    pub cd_rev: Summary,
    pub cd_der: Summary,
    pub n: usize,
}

#[derive(Debug)]
pub struct JobFailure {
    pub file: String,
    pub t60: f64,
    pub error: reverbkit::Error,
}

#[derive(Debug)]
pub struct BenchmarkReport {
    /// One row per T60, ascending.
    pub rows: Vec<ConditionRow>,
    pub failures: Vec<JobFailure>,
    pub jobs: usize,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                r.t60,
                r.fwssnr_rev.mean,
                r.fwssnr_rev.std,
                r.fwssnr_der.mean,
                r.fwssnr_der.std,
                r.cd_rev.mean,
                r.cd_rev.std,
                r.cd_der.mean,
                r.cd_der.std,
                r.n
            );
        }
        out
    }

    pub fn all_failed(&self) -> bool {
        self.jobs > 0 && self.failures.len() == self.jobs
    }
}

/// Runs every (signal, T60) pair of `corpus` in parallel. `corpus` entries are
/// `(name, dry signal)`; rows and failures come back in a fixed order.
pub fn run_benchmark(corpus: &[(String, AudioSignal)], plan: &BenchmarkPlan) -> BenchmarkReport {
    let mut t60s = plan.t60s.clone();
    t60s.sort_by(f64::total_cmp);
    t60s.dedup();

    let jobs: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|f| (0..t60s.len()).map(move |t| (f, t)))
        .collect();
    let results: Vec<reverbkit::Result<ConditionScores>> = jobs
        .par_iter()
        .map(|&(f, t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream((f * t60s.len() + t) as u64);
            let dry = &corpus[f].1;
            let room = plan.geometry.sample(t60s[t], dry.sample_rate(), &mut rng);
            run_condition(dry, &room, &plan.config)
        })
        .collect();

    let mut per_t60: Vec<Vec<ConditionScores>> = vec![Vec::new(); t60s.len()];
    let mut failures = Vec::new();
    for (&(f, t), result) in jobs.iter().zip(results) {
        match result {
            Ok(scores) => per_t60[t].push(scores),
            Err(error) => failures.push(JobFailure {
                file: corpus[f].0.clone(),
                t60: t60s[t],
                error,
            }),
        }
    }
    let rows = t60s
        .iter()
        .zip(&per_t60)
        .map(|(&t60, scores)| {
            let col = |get: fn(&ConditionScores) -> f64| summarize(&scores.iter().map(get).collect::<Vec<_>>());
            ConditionRow {
                t60,
                fwssnr_rev: col(|s| s.reverberant.fwssnr_db),
                fwssnr_der: col(|s| s.dereverberated.fwssnr_db),
                cd_rev: col(|s| s.reverberant.cepstral_distance),
                cd_der: col(|s| s.dereverberated.cepstral_distance),
                n: scores.len(),
            }
        })
        .collect();
    BenchmarkReport {
        rows,
        failures,
        jobs: jobs.len(),
    }
}
