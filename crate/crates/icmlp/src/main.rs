use std::process::ExitCode;

fn main() -> ExitCode {
    icmlp::cli::main()
}
