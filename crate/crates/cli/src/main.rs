use std::process::ExitCode;

use clap::Parser;
use rbdo_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            let flag = match m.converged {
                Some(false) => " (not converged)",
                _ => "",
            };
            println!("{} complete{flag}: manifest {}", m.command, m.manifest);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
