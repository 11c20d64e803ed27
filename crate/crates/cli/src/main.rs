use std::process::exit;

use clap::error::ErrorKind;
use clap::Parser;
use meanineq_cli::{configure_threads, run, Cli, ExitStatus};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => ExitStatus::Config.code(),
            };
            let _ = e.print();
            exit(code);
        }
    };
    let result = configure_threads().and_then(|()| run(&cli));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            exit(outcome.status.code());
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.status.code());
        }
    }
}
