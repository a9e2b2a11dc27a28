use std::process::ExitCode;

use clap::Parser;

use proxgroup::cli::{run, Cli, RunConfig, EXIT_ERROR};

fn main() -> ExitCode {
    let config = RunConfig::from(Cli::parse());
    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("proxgroup: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let written = match &config.output {
        Some(path) => std::fs::write(path, &outcome.document).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", outcome.document);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("proxgroup: {e}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    ExitCode::from(outcome.exit_code as u8)
}
