use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bens::cli::run())
}
