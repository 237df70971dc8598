use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match retire::cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    ExitCode::from(retire::cli::run(cli))
}
