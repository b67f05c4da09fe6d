use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(oscbath::cli::run_command(std::env::args_os()) as u8)
}
