//! Scenario files, trace export and the commands behind the `adsafe` binary.

pub mod commands;
pub mod scenario_file;
pub mod trace_csv;
