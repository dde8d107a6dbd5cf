use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = chainsdn_cli::Cli::parse();
    let code = chainsdn_cli::execute(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
