use std::process::ExitCode;

fn main() -> ExitCode {
    qvlab::cli::main()
}
