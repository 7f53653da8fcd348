use std::process::ExitCode;

fn main() -> ExitCode {
    sepqma::cli::main_with(std::env::args_os())
}
