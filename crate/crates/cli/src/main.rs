use std::path::PathBuf;
use std::process::ExitCode;

use adsafe_cli::commands::{cmd_complexity, cmd_run, cmd_validate};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adsafe", version, about = "Adaptive safety simulator for wireless sensor motes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write motes.csv, pairs.csv and summary.txt.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and check a scenario without simulating it.
    Validate { scenario: PathBuf },
    /// Print the number of trust relations in a society of n motes.
    Complexity {
        #[arg(allow_hyphen_values = true)]
        n: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, seed } => cmd_run(&scenario, &out, seed).map(|summary| print!("{summary}")),
        Command::Validate { scenario } => cmd_validate(&scenario).map(|()| println!("ok")),
        Command::Complexity { n } => cmd_complexity(&n).map(|count| println!("{count}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
