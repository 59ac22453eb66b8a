use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(capset_cli::run(std::env::args_os()))
}
