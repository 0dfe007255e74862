//! Command-line front end: reads event files, runs the selected model and
//! writes a JSON report.

pub mod config;
pub mod report;
pub mod run;

use std::process::ExitCode;

pub use config::{Cli, RunConfig};
pub use report::Report;
pub use run::{execute, RunError};

/// Exit code of a run that found no solution.
pub const EXIT_INFEASIBLE: u8 = 2;

/// Runs `cli` end to end: resolves the config, solves, writes the report.
pub fn main_with(cli: &Cli) -> Result<ExitCode, RunError> {
    let cfg = RunConfig::resolve(cli)?;
    let report = execute(&cfg)?;
    let json = report.to_json();
    match &cli.report {
        Some(path) => {
            std::fs::write(path, &json).map_err(|e| RunError {
                path: Some(path.clone()),
                error: lptype_core::Error::Io(e.to_string()),
            })?;
            println!("{}", report.summary());
        }
        None => print!("{json}"),
    }
    Ok(match report.status {
        report::Status::Solution => ExitCode::SUCCESS,
        report::Status::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
    })
}
