use std::process::ExitCode;

fn main() -> ExitCode {
    swarmlab::cli::init_logging();
    let code = swarmlab::cli::run_from(std::env::args_os());
    ExitCode::from(code as u8)
}
