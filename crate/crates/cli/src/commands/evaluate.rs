use std::fs::OpenOptions;
use std::io::Write;

use reverbkit::{evaluate as score, read_wav, MetricsReport};

use crate::args::EvaluateArgs;
use crate::{warn_if_unusual_rate, Failure};

pub fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let clean = read_wav(&args.clean).map_err(|e| Failure::at(&args.clean, e))?;
    let test = read_wav(&args.test).map_err(|e| Failure::at(&args.test, e))?;
    warn_if_unusual_rate(&args.clean, clean.sample_rate());
    if clean.len() != test.len() {
        eprintln!(
            "warning: lengths differ ({} vs {} samples); the test signal is cut or zero-padded to the clean length",
            clean.len(),
            test.len()
        );
    }
    let report = score(&clean, &test)?;
    print!("{}", report.to_key_values());

    if let Some(path) = &args.csv {
        let label = args.label.clone().unwrap_or_else(|| args.test.display().to_string());
        let io_err = |e: std::io::Error| Failure::io(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
        let empty = file.metadata().map_err(io_err)?.len() == 0;
        let mut text = String::new();
        if empty {
            text.push_str(MetricsReport::CSV_HEADER);
            text.push('\n');
        }
        text.push_str(&report.csv_row(&label));
        text.push('\n');
        file.write_all(text.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}
