use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use memplan_cli::commands::{exit_code, run, Cli};
use memplan_cli::service::error_body;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.render(cli.global.json));
            if cli.global.json {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&error_body(&e)).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(exit_code(&e))
        }
    }
}
