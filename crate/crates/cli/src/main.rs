use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phonon_router::scenario::{self, RunOptions};
use phonon_router::{device, Error, Execution};

#[derive(Parser)]
#[command(name = "phonon-router", version, about = "Transmon-SAW scattering and routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario against a device configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory; overrides the scenario's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for stochastic scenarios.
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate grid points on a single thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Check a device configuration and print its derived constants.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, scenario: scenario_path, out, seed, sequential } => {
            let opts = RunOptions {
                out_dir: out,
                seed,
                exec: if sequential { Execution::Sequential } else { Execution::default() },
            };
            let report = scenario::run(&config, &scenario_path, &opts)?;
            for note in &report.notes {
                println!("{note}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            println!("wrote {}", report.manifest.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = scenario::validate_config(&config)?;
            print!("{}", device::derived_summary(&cfg)?.to_text());
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}
