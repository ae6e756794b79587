//! Library side of the `timebin-sim` command line: scenario files, presets,
//! command implementations and output formats.
//!
//! Exit codes: 0 success, 2 argument or parse error, 3 invariant violation,
//! 4 degenerate computation.

pub mod commands;
pub mod format;
pub mod presets;
pub mod scenario_file;

use std::fmt;
use std::path::Path;

use crate::error::Error;
use crate::montecarlo::Scenario;
use scenario_file::{load_scenario, parse_scenario, ScenarioError, ScenarioErrorKind};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "TIMEBIN_SIM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Domain(_) => EXIT_INVARIANT,
            Error::UndefinedVisibility | Error::NoSolution(_) | Error::DegenerateFit(_) => EXIT_DEGENERATE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let code = match e.kind {
            ScenarioErrorKind::Parse => EXIT_USAGE,
            ScenarioErrorKind::Invariant => EXIT_INVARIANT,
        };
        Self { code, message: e.to_string() }
    }
}

/// Load a scenario from a file path or a named preset (exactly one).
pub fn resolve_scenario(path: Option<&Path>, preset: Option<&str>) -> Result<Scenario, CliError> {
    match (path, preset) {
        (Some(p), None) => Ok(load_scenario(p)?),
        (None, Some(name)) => {
            let src = presets::preset_source(name).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset '{name}'; expected one of {}",
                    presets::PRESET_NAMES.join(", ")
                ))
            })?;
            Ok(parse_scenario(src, &format!("preset:{name}"))?)
        }
        _ => Err(CliError::usage("give either a scenario file or --preset NAME")),
    }
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}
