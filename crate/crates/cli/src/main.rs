use std::process::ExitCode;

use amo_lab::{run, Cli, ExperimentConfig, EXIT_USAGE};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(&ExperimentConfig::from_cli(cli)) {
        Ok(summary) => {
            if summary.failed > 0 {
                eprintln!("{} of {} rows failed; see the error column", summary.failed, summary.rows);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("amo-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
