use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use reverbkit::{ReconstructMethod, SampleFormat};

#[derive(Debug, Parser)]
#[command(name = "reverbkit", version, about = "Blind single-channel speech dereverberation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dereverberate a mono WAV file.
    Dereverb(DereverbArgs),
    /// Generate an image-method room impulse response and optionally apply it.
    Simulate(SimulateArgs),
    /// Score a processed file against its clean reference.
    Evaluate(EvaluateArgs),
    /// Reverberate a corpus of dry files, dereverberate, and tabulate the scores per T60.
    Benchmark(BenchmarkArgs),
}

/// Analysis and solver overrides. Unset values come from `--config`, then from the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Kernel smoothness weight, scaled per band by the band energy.
    #[arg(long = "lambda-h", value_name = "F64")]
    pub lambda_h: Option<f64>,
    /// Sparsity weight on the dry spectrogram.
    #[arg(long = "lambda-s", value_name = "F64")]
    pub lambda_s: Option<f64>,
    /// Exponent of the sparsity penalty, in (0, 2).
    #[arg(long, value_name = "F64")]
    pub p: Option<f64>,
    /// Kernel length in frames.
    #[arg(long, value_name = "FRAMES")]
    pub nh: Option<usize>,
    /// STFT window length in samples.
    #[arg(long, value_name = "SAMPLES")]
    pub win: Option<usize>,
    /// STFT hop in samples.
    #[arg(long, value_name = "SAMPLES")]
    pub hop: Option<usize>,
    #[arg(long = "max-iter", value_name = "N")]
    pub max_iter: Option<usize>,
    /// Stop once the change in S falls below this fraction of the input norm.
    #[arg(long = "delta-factor", value_name = "F64")]
    pub delta_factor: Option<f64>,
    /// Relative floor applied to previous iterates.
    #[arg(long = "eps-floor", value_name = "F64")]
    pub eps_floor: Option<f64>,
    /// Skip the per-band peak rescaling of S.
    #[arg(long = "no-rescale")]
    pub no_rescale: bool,
    /// Phase reconstruction: magnitude_replace or gain_mask.
    #[arg(long, value_name = "METHOD")]
    pub method: Option<ReconstructMethod>,
    /// Plain `key = value` settings file; flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DereverbArgs {
    pub input: PathBuf,
    #[arg(short, long, value_name = "PATH")]
    pub output: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Recorded in the manifest. Dereverberation itself draws no random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output sample format: pcm16 or float32.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<SampleFormat>,
    /// Write the per-iteration cost history as CSV.
    #[arg(long = "dump-cost", value_name = "PATH")]
    pub dump_cost: Option<PathBuf>,
    /// Write the estimated dry power spectrogram as text.
    #[arg(long = "dump-spec", value_name = "PATH")]
    pub dump_spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("walls").required(true).args(["t60", "reflection"])))]
#[command(group(ArgGroup::new("outputs").required(true).multiple(true).args(["out", "reverberant"])))]
pub struct SimulateArgs {
    /// Room size in metres, e.g. 6x4x3.
    #[arg(long, value_parser = parse_room, value_name = "XxYxZ")]
    pub room: [f64; 3],
    /// Source position in metres, e.g. 1,1,1.5.
    #[arg(long, value_parser = parse_point, value_name = "X,Y,Z")]
    pub src: [f64; 3],
    #[arg(long, value_parser = parse_point, value_name = "X,Y,Z")]
    pub mic: [f64; 3],
    /// Target reverberation time in seconds.
    #[arg(long)]
    pub t60: Option<f64>,
    /// Wall pressure reflection coefficient in [0, 1).
    #[arg(long)]
    pub reflection: Option<f64>,
    /// Maximum reflections per axis.
    #[arg(long)]
    pub order: Option<usize>,
    /// Response length in samples. Defaults to 1.2 × T60 plus the direct path.
    #[arg(long, value_name = "SAMPLES")]
    pub length: Option<usize>,
    /// Sample rate in Hz. Defaults to the rate of `--input`, or 16000.
    #[arg(long)]
    pub fs: Option<u32>,
    /// Speed of sound in m/s.
    #[arg(long, default_value_t = reverbkit::rir::DEFAULT_SPEED_OF_SOUND)]
    pub c: f64,
    /// Where to write the impulse response (float32 WAV).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Dry signal to reverberate.
    #[arg(long, value_name = "PATH", requires = "reverberant")]
    pub input: Option<PathBuf>,
    /// Where to write the reverberant signal, peak-normalized to 0.9.
    #[arg(long, value_name = "PATH", requires = "input")]
    pub reverberant: Option<PathBuf>,
    /// Sample format of the reverberant file.
    #[arg(long, default_value = "pcm16", value_name = "FORMAT")]
    pub format: SampleFormat,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    pub clean: PathBuf,
    pub test: PathBuf,
    /// Append a CSV row, writing the header first if the file is new or empty.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Value of the `file` column. Defaults to the test path.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Directory of dry mono WAV files.
    pub corpus: PathBuf,
    /// Reverberation times in seconds.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.45,0.6,0.75")]
    pub t60: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_room, default_value = "6x4x3", value_name = "XxYxZ")]
    pub room: [f64; 3],
    #[arg(long, value_parser = parse_point, default_value = "1.5,1.2,1.5", value_name = "X,Y,Z")]
    pub src: [f64; 3],
    #[arg(long, value_parser = parse_point, default_value = "4.0,2.5,1.6", value_name = "X,Y,Z")]
    pub mic: [f64; 3],
    /// Half-width in metres of the seeded uniform jitter on source and mic coordinates.
    #[arg(long, default_value_t = 0.1)]
    pub jitter: f64,
    /// CSV destination. Defaults to stdout.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_triple(s: &str, sep: char) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three values separated by `{sep}`, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| format!("`{part}` is not a number"))?;
    }
    Ok(out)
}

pub fn parse_room(s: &str) -> Result<[f64; 3], String> {
    parse_triple(s, 'x')
}

pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    parse_triple(s, ',')
}
