use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rendezvous::cli::main(std::env::args_os()))
}
