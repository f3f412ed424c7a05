//! Key=value record written next to every dereverberated file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use reverbkit::SampleFormat;

use crate::settings::RunSettings;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub input: PathBuf,
    pub output: PathBuf,
    pub sample_rate: u32,
    pub num_samples: usize,
    pub settings: RunSettings,
    pub dump_cost: Option<PathBuf>,
    pub dump_spec: Option<PathBuf>,
    pub iterations: usize,
    pub converged: bool,
    pub final_cost: f64,
    pub least_squares_fallbacks: usize,
    pub clipped_samples: usize,
    pub timings: Vec<(&'static str, Duration)>,
}

/// `out.wav` → `out.wav.manifest`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn format_name(format: SampleFormat) -> &'static str {
    match format {
        SampleFormat::Pcm16 => "pcm16",
        SampleFormat::Float32 => "float32",
    }
}

impl RunManifest {
    /// Floats use Rust's shortest round-trip formatting, so parsing the
    /// manifest back yields bit-identical settings.
    pub fn to_key_values(&self) -> String {
        let c = &self.settings.config;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("version", &env!("CARGO_PKG_VERSION"));
        kv("input", &self.input.display());
        kv("output", &self.output.display());
        kv("sample_rate", &self.sample_rate);
        kv("num_samples", &self.num_samples);
        kv("seed", &self.settings.seed);
        kv("format", &format_name(self.settings.format));
        kv("window", &c.stft.window_kind().name());
        kv("win", &c.stft.window_len());
        kv("hop", &c.stft.hop());
        kv("lambda_h", &c.solver.lambda_h);
        kv("lambda_s", &c.solver.lambda_s);
        kv("p", &c.solver.p);
        kv("nh", &c.solver.n_h);
        kv("max_iter", &c.solver.max_iter);
        kv("delta_factor", &c.solver.delta_factor);
        kv("eps_floor", &c.solver.eps_floor);
        kv("rescale", &c.solver.rescale);
        kv("method", &c.method.name());
        if let Some(p) = &self.dump_cost {
            kv("dump_cost", &p.display());
        }
        if let Some(p) = &self.dump_spec {
            kv("dump_spec", &p.display());
        }
        kv("iterations", &self.iterations);
        kv("converged", &self.converged);
        kv("final_cost", &self.final_cost);
        kv("least_squares_fallbacks", &self.least_squares_fallbacks);
        kv("clipped_samples", &self.clipped_samples);
        for (stage, t) in &self.timings {
            kv(&format!("time_{stage}_s"), &format_args!("{:.6}", t.as_secs_f64()));
        }
        out
    }
}
