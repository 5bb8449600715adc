use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = replab::Cli::parse();
    match replab::resolve(cli).and_then(|cfg| replab::run(&cfg)) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(replab::USAGE_EXIT)
        }
    }
}
