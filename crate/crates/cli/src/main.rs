use clap::Parser;

use opalg_cli::{execute, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(out) => {
            println!("{}", out.human);
            if let Some(path) = &cli.command.common().out {
                if let Err(e) = std::fs::write(path, out.report.to_json()) {
                    eprintln!("error: cannot write report to {}: {e}", path.display());
                    std::process::exit(1);
                }
            }
            std::process::exit(out.exit_code);
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
