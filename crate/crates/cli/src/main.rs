use std::io::Write;
use std::process::ExitCode;

use cenet_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Some(out) = &outcome.stdout {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(out.as_bytes()).is_err() {
                    return ExitCode::from(1);
                }
            }
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
