use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(reverbkit_cli::run(std::env::args_os()))
}
