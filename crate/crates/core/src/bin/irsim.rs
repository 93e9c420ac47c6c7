use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(irsim::cli::run(std::env::args()) as u8)
}
