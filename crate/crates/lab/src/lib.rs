//! Fixture loading, suite dispatch and deterministic reports on top of
//! `demuth-core`. The `labcli` binary is a thin wrapper around [`run`].

pub mod config;
pub mod error;
pub mod fixture;
pub mod report;
pub mod suites;

use rayon::prelude::*;

pub use config::{Command, Format, RunConfig};
pub use error::LabError;
pub use report::{Record, Report, Status};

use crate::fixture::{load_fixture, Fixture};
use crate::report::ConfigEcho;
use crate::suites::{run_suite, Params};

/// Validates the config, loads every fixture, runs the requested suites and
/// assembles the report. Worker count never changes the output.
pub fn run(config: &RunConfig) -> Result<Report, LabError> {
    config.validate()?;
    let paths = config::resolve_fixture_paths(&config.fixture_paths)?;
    let fixtures = paths
        .iter()
        .map(|p| load_fixture(p))
        .collect::<Result<Vec<Fixture>, _>>()?;
    let params = Params {
        depth: config.depth,
        precision: config.precision,
        scale: config.scale,
    };
    let suites: Vec<Command> = match config.command {
        Command::Report => Command::SUITES.to_vec(),
        c => vec![c],
    };
    let jobs: Vec<(&Fixture, Command)> = fixtures
        .iter()
        .flat_map(|f| suites.iter().map(move |&s| (f, s)))
        .collect();
    let work = || -> Vec<Record> {
        jobs.par_iter()
            .flat_map_iter(|(f, s)| run_suite(f, *s, &params))
            .collect()
    };
    let records = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut names: Vec<String> = fixtures.iter().map(|f| f.name.clone()).collect();
    names.sort();
    let echo = ConfigEcho {
        depth: config.depth,
        precision: config.precision,
        scale: config.scale,
        fixtures: names,
    };
    Ok(Report::assemble(config.command, echo, records))
}
