use std::io::Write;
use std::time::Instant;

use reverbkit::{dereverberate, read_wav, solver::write_cost_csv, write_wav};

use super::create;
use crate::args::DereverbArgs;
use crate::manifest::{manifest_path, RunManifest};
use crate::settings::RunSettings;
use crate::{warn_if_unusual_rate, Failure};

pub fn dereverb(args: &DereverbArgs) -> Result<(), Failure> {
    let settings = RunSettings::resolve(&args.solver, args.seed, args.format)?;
    let started = Instant::now();

    let t = Instant::now();
    let input = read_wav(&args.input).map_err(|e| Failure::at(&args.input, e))?;
    let read_time = t.elapsed();
    warn_if_unusual_rate(&args.input, input.sample_rate());

    let out = dereverberate(&input, &settings.config).map_err(|e| Failure::at(&args.input, e))?;

    let t = Instant::now();
    let clipped = write_wav(&out.signal, &args.output, settings.format).map_err(|e| Failure::at(&args.output, e))?;
    if clipped > 0 {
        eprintln!("warning: {clipped} samples clipped while writing {}", args.output.display());
    }
    if let Some(path) = &args.dump_cost {
        let mut w = create(path)?;
        write_cost_csv(&out.state.cost_history, &mut w).map_err(|e| Failure::at(path, e))?;
        w.flush().map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &args.dump_spec {
        let mut w = create(path)?;
        out.estimate.write_text(&mut w).map_err(|e| Failure::at(path, e))?;
        w.flush().map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    let write_time = t.elapsed();

    let manifest = RunManifest {
        input: args.input.clone(),
        output: args.output.clone(),
        sample_rate: input.sample_rate(),
        num_samples: input.len(),
        settings,
        dump_cost: args.dump_cost.clone(),
        dump_spec: args.dump_spec.clone(),
        iterations: out.state.iteration,
        converged: out.state.converged,
        final_cost: out.state.final_cost().map_or(f64::NAN, |c| c.total()),
        least_squares_fallbacks: out.state.least_squares_fallbacks,
        clipped_samples: clipped,
        timings: vec![
            ("read", read_time),
            ("stft", out.timings.stft),
            ("solver", out.timings.solver),
            ("reconstruct", out.timings.reconstruct),
            ("write", write_time),
            ("total", started.elapsed()),
        ],
    };
    let path = manifest_path(&args.output);
    std::fs::write(&path, manifest.to_key_values()).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    eprintln!(
        "{} -> {} ({} iterations{})",
        args.input.display(),
        args.output.display(),
        out.state.iteration,
        if out.state.converged { ", converged" } else { "" }
    );
    Ok(())
}
