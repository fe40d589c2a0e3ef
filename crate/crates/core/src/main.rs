use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(magflow::cli::run(std::env::args_os()))
}
