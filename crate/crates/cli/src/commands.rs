use std::fs;
use std::path::Path;

use adsafe_core::rwp::trust_relation_count;
use adsafe_core::simnet::{run, SimError};
use thiserror::Error;

use crate::scenario_file::{ScenarioFile, ScenarioFileError};
use crate::trace_csv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCENARIO: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Scenario(#[from] ScenarioFileError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Io { .. } | CommandError::Csv(_) => EXIT_IO,
            _ => EXIT_SCENARIO,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CommandError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file = ScenarioFile::parse(&text)?;
    file.validate()?;
    Ok(file)
}

/// Output of a successful run, kept in memory until every part is ready.
pub struct RunOutput {
    pub motes_csv: Vec<u8>,
    pub pairs_csv: Vec<u8>,
    pub summary: String,
}

pub fn simulate(scenario_path: &Path, seed: Option<u64>) -> Result<RunOutput, CommandError> {
    let mut file = load_scenario(scenario_path)?;
    if let Some(seed) = seed {
        file.scenario.seed = seed;
    }
    let trace = run(&file.scenario)?;
    Ok(RunOutput {
        motes_csv: trace_csv::motes_csv(&trace)?,
        pairs_csv: trace_csv::pairs_csv(&trace)?,
        summary: trace_csv::summary(&trace),
    })
}

pub fn cmd_run(scenario_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<String, CommandError> {
    let output = simulate(scenario_path, seed)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for (name, bytes) in [
        ("motes.csv", output.motes_csv.as_slice()),
        ("pairs.csv", output.pairs_csv.as_slice()),
        ("summary.txt", output.summary.as_bytes()),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(output.summary)
}

pub fn cmd_validate(scenario_path: &Path) -> Result<(), CommandError> {
    load_scenario(scenario_path).map(|_| ())
}

pub fn cmd_complexity(n: &str) -> Result<String, CommandError> {
    let n: u32 = n
        .trim()
        .parse()
        .map_err(|_| CommandError::Argument(format!("`{n}` is not a non-negative integer")))?;
    trust_relation_count(n)
        .map(|count| count.to_string())
        .map_err(|e| CommandError::Argument(e.to_string()))
}
