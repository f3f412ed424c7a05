//! `key = value` settings files and their merge with command-line flags.
//!
//! The keys are the ones a run manifest records, so a manifest can be passed
//! back through `--config` to repeat a run. Manifest keys that only describe
//! a run (paths, timings, results) are accepted and ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use reverbkit::{DereverbConfig, ReconstructMethod, SampleFormat, SolverConfig, StftConfig, WindowKind};

use crate::args::SolverArgs;
use crate::Failure;

/// Keys that set a numeric or behavioural option.
pub const SETTING_KEYS: &[&str] = &[
    "lambda_h",
    "lambda_s",
    "p",
    "nh",
    "win",
    "hop",
    "window",
    "max_iter",
    "delta_factor",
    "eps_floor",
    "rescale",
    "method",
    "seed",
    "format",
];

/// Manifest keys that carry no settings.
const DESCRIPTIVE_KEYS: &[&str] = &[
    "version",
    "input",
    "output",
    "sample_rate",
    "num_samples",
    "iterations",
    "converged",
    "final_cost",
    "least_squares_fallbacks",
    "clipped_samples",
    "dump_cost",
    "dump_spec",
];

fn is_descriptive(key: &str) -> bool {
    DESCRIPTIVE_KEYS.contains(&key) || key.starts_with("time_")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SettingsFile {
    values: BTreeMap<String, String>,
}

impl SettingsFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`", i + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            if is_descriptive(key) {
                continue;
            }
            if !SETTING_KEYS.contains(&key) {
                return Err(format!("line {}: unknown key `{key}`", i + 1));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", i + 1));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Failure::usage(format!("config key `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }
}

/// Everything that determines a dereverberation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub config: DereverbConfig,
    pub seed: u64,
    pub format: SampleFormat,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            config: DereverbConfig::default(),
            seed: 0,
            format: SampleFormat::Pcm16,
        }
    }
}

impl RunSettings {
    /// Flags first, then the settings file named by `--config`, then defaults.
    pub fn resolve(
        flags: &SolverArgs,
        seed: Option<u64>,
        format: Option<SampleFormat>,
    ) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(path) => SettingsFile::load(path)?,
            None => SettingsFile::default(),
        };
        Self::merge(flags, seed, format, &file)
    }

    pub fn merge(
        flags: &SolverArgs,
        seed: Option<u64>,
        format: Option<SampleFormat>,
        file: &SettingsFile,
    ) -> Result<Self, Failure> {
        let defaults = RunSettings::default();
        let solver_defaults = defaults.config.solver;
        let stft_defaults = defaults.config.stft;

        // Hann is the only window; parsing rejects any other name.
        file.get::<WindowKind>("window")?;
        let rescale = if flags.no_rescale {
            false
        } else {
            file.get("rescale")?.unwrap_or(solver_defaults.rescale)
        };
        let solver = SolverConfig {
            lambda_h: pick(flags.lambda_h, file, "lambda_h", solver_defaults.lambda_h)?,
            lambda_s: pick(flags.lambda_s, file, "lambda_s", solver_defaults.lambda_s)?,
            p: pick(flags.p, file, "p", solver_defaults.p)?,
            n_h: pick(flags.nh, file, "nh", solver_defaults.n_h)?,
            max_iter: pick(flags.max_iter, file, "max_iter", solver_defaults.max_iter)?,
            delta_factor: pick(flags.delta_factor, file, "delta_factor", solver_defaults.delta_factor)?,
            rescale,
            eps_floor: pick(flags.eps_floor, file, "eps_floor", solver_defaults.eps_floor)?,
        };
        let win = pick(flags.win, file, "win", stft_defaults.window_len())?;
        let hop = pick(flags.hop, file, "hop", stft_defaults.hop())?;
        let stft = StftConfig::new(win, hop).map_err(|e| Failure::usage(e.to_string()))?;
        let method: ReconstructMethod = pick(flags.method, file, "method", defaults.config.method)?;
        let config = DereverbConfig { stft, solver, method };
        config.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(Self {
            config,
            seed: pick(seed, file, "seed", defaults.seed)?,
            format: pick(format, file, "format", defaults.format)?,
        })
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &SettingsFile, key: &str, default: T) -> Result<T, Failure> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_flags_or_file() {
        let s = RunSettings::merge(&SolverArgs::default(), None, None, &SettingsFile::default()).unwrap();
        assert_eq!(s, RunSettings::default());
        assert_eq!(s.config.solver.n_h, 15);
        assert_eq!(s.config.stft.window_len(), 512);
    }

    #[test]
    fn flags_override_file() {
        let file = SettingsFile::parse("# tuned\nlambda_s = 0.5\nnh=10\nrescale = false\n\nhop = 128\n").unwrap();
        let flags = SolverArgs {
            lambda_s: Some(0.25),
            ..SolverArgs::default()
        };
        let s = RunSettings::merge(&flags, Some(9), None, &file).unwrap();
        assert_eq!(s.config.solver.lambda_s, 0.25);
        assert_eq!(s.config.solver.n_h, 10);
        assert!(!s.config.solver.rescale);
        assert_eq!(s.config.stft.hop(), 128);
        assert_eq!(s.seed, 9);
    }

    #[test]
    fn manifest_only_keys_are_ignored() {
        let file = SettingsFile::parse("input=a.wav\ntime_solver_s=0.1\nmax_iter=7\n").unwrap();
        let s = RunSettings::merge(&SolverArgs::default(), None, None, &file).unwrap();
        assert_eq!(s.config.solver.max_iter, 7);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(SettingsFile::parse("lambda = 1").is_err());
        assert!(SettingsFile::parse("p = 1\np = 2").is_err());
        assert!(SettingsFile::parse("just words").is_err());
        let file = SettingsFile::parse("p = one").unwrap();
        let err = RunSettings::merge(&SolverArgs::default(), None, None, &file).unwrap_err();
        assert_eq!(err.code, crate::EXIT_USAGE);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let flags = SolverArgs {
            p: Some(2.5),
            ..SolverArgs::default()
        };
        let err = RunSettings::merge(&flags, None, None, &SettingsFile::default()).unwrap_err();
        assert_eq!(err.code, crate::EXIT_USAGE);
        let flags = SolverArgs {
            hop: Some(1024),
            ..SolverArgs::default()
        };
        assert!(RunSettings::merge(&flags, None, None, &SettingsFile::default()).is_err());
    }
}
