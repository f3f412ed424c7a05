use std::path::{Path, PathBuf};

use reverbkit::read_wav;

use crate::args::BenchmarkArgs;
use crate::benchmark::{run_benchmark, BenchmarkPlan, Geometry};
use crate::settings::RunSettings;
use crate::{exit_code, warn_if_unusual_rate, Failure};

/// `*.wav` files directly inside `dir`, sorted by file name.
pub(crate) fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?.path();
        let is_wav = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<(), Failure> {
    let settings = RunSettings::resolve(&args.solver, None, None)?;
    if args.t60.is_empty() || args.t60.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Failure::usage("--t60 needs positive reverberation times"));
    }
    if !(args.jitter >= 0.0 && args.jitter.is_finite()) {
        return Err(Failure::usage("--jitter must be a nonnegative length"));
    }
    let files = list_wavs(&args.corpus)?;
    if files.is_empty() {
        return Err(Failure::usage(format!("no .wav files in {}", args.corpus.display())));
    }

    let mut corpus = Vec::with_capacity(files.len());
    let mut unreadable = 0;
    for path in &files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match read_wav(path) {
            Ok(dry) => {
                warn_if_unusual_rate(path, dry.sample_rate());
                corpus.push((name, dry));
            }
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                unreadable += 1;
            }
        }
    }
    if corpus.is_empty() {
        return Err(Failure::io(format!("none of the {unreadable} files could be read")));
    }

    let plan = BenchmarkPlan {
        t60s: args.t60.clone(),
        seed: args.seed,
        geometry: Geometry {
            room: args.room,
            source: args.src,
            mic: args.mic,
            jitter: args.jitter,
        },
        config: settings.config,
    };
    let report = run_benchmark(&corpus, &plan);
    for f in &report.failures {
        eprintln!("warning: {} at t60={}: {}", f.file, f.t60, f.error);
    }
    let failed = report.failures.len() + unreadable * plan.t60s.len();
    let total = report.jobs + unreadable * plan.t60s.len();
    eprintln!("failures={failed} of {total}");
    if report.all_failed() {
        let code = report.failures.first().map_or(crate::EXIT_IO, |f| exit_code(&f.error));
        return Err(Failure {
            code,
            message: "every benchmark job failed".into(),
        });
    }

    let csv = report.to_csv();
    match &args.output {
        Some(path) => std::fs::write(path, csv).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}
