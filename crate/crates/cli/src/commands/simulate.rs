use reverbkit::rir::calibrated_reflection;
use reverbkit::{apply_rir, image_method_rir, read_wav, schroeder_t60, write_wav, RoomSpec, SampleFormat, WallAbsorption};

use crate::args::SimulateArgs;
use crate::benchmark::REVERBERANT_PEAK;
use crate::{warn_if_unusual_rate, Failure, PIPELINE_SAMPLE_RATE};

pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let dry = match &args.input {
        Some(path) => {
            let dry = read_wav(path).map_err(|e| Failure::at(path, e))?;
            warn_if_unusual_rate(path, dry.sample_rate());
            Some(dry)
        }
        None => None,
    };
    let fs = match (args.fs, &dry) {
        (Some(fs), Some(d)) if fs != d.sample_rate() => {
            return Err(Failure::io(format!(
                "--fs {fs} does not match the {} Hz input",
                d.sample_rate()
            )))
        }
        (Some(fs), _) => fs,
        (None, Some(d)) => d.sample_rate(),
        (None, None) => PIPELINE_SAMPLE_RATE,
    };
    let absorption = match (args.t60, args.reflection) {
        (Some(t), _) => WallAbsorption::T60(t),
        (None, Some(r)) => WallAbsorption::Reflection(r),
        (None, None) => return Err(Failure::usage("one of --t60 or --reflection is required")),
    };
    let mut room = RoomSpec::new(args.room, args.src, args.mic, absorption, fs);
    room.max_order = args.order;
    room.speed_of_sound = args.c;
    room.validate()?;

    let length = args.length.unwrap_or_else(|| room.default_length());
    if length == 0 {
        return Err(Failure::usage("--length must be positive"));
    }
    let reflection = match room.absorption {
        WallAbsorption::T60(_) => calibrated_reflection(&room)?,
        WallAbsorption::Reflection(r) => r,
    };
    // same response image_method_rir builds for a T60 target, without calibrating twice
    let rir = image_method_rir(
        &RoomSpec {
            absorption: WallAbsorption::Reflection(reflection),
            ..room.clone()
        },
        length,
    )?;

    if let Some(path) = &args.out {
        write_wav(&rir, path, SampleFormat::Float32).map_err(|e| Failure::at(path, e))?;
    }
    if let (Some(dry), Some(path)) = (&dry, &args.reverberant) {
        let wet = apply_rir(dry, &rir)?.peak_normalized(REVERBERANT_PEAK)?;
        write_wav(&wet, path, args.format).map_err(|e| Failure::at(path, e))?;
    }

    println!("reflection={reflection}");
    println!("length={length}");
    println!("direct_delay_samples={:.3}", room.direct_delay());
    match schroeder_t60(rir.samples(), fs) {
        Some(t) => println!("schroeder_t60_s={t:.4}"),
        None => println!("schroeder_t60_s=nan"),
    }
    Ok(())
}
