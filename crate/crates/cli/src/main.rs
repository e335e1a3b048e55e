use std::process::ExitCode;

use clap::Parser;
use doubleform_cli::{run, Cli, EXIT_NOT_CONVERGED};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.code == EXIT_NOT_CONVERGED {
                eprintln!("error: solver did not reach the tolerance; best iterate written");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
