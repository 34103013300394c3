use std::process::ExitCode;

fn main() -> ExitCode {
    singlet_init::cli::main_entry()
}
