use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(maxcorr_cli::run(std::env::args_os()))
}
