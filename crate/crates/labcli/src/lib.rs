//! Experiment runner for the mflab laboratory: TOML configurations, the
//! subcommand pipelines, the acceptance criteria and report output.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod report;
pub mod svg;

use mflab::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CRITERIA_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERIC: i32 = 3;
}

/// Exit code for an error that aborted a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Validation(_) | Error::Parameter(_) => exit::USAGE,
        _ => exit::NUMERIC,
    }
}

/// Exit code of a completed command.
pub fn outcome_code(o: &commands::Outcome) -> i32 {
    if o.numeric_failure {
        exit::NUMERIC
    } else if o.pass {
        exit::PASS
    } else {
        exit::CRITERIA_FAILED
    }
}
