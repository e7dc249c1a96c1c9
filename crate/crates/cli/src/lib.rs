//! Command-line front end for `amo-core`.
//!
//! Every subcommand maps a parameter grid onto one core operation and emits
//! one [`ResultRow`] per grid point, as CSV (with a `#` schema line) or as
//! JSON lines. Rows are computed on a private thread pool and written in
//! grid order, so output bytes never depend on the worker count.
//!
//! Exit codes: 0 on success (including per-row failures), 1 on I/O or
//! whole-run failure, 2 on an invalid configuration.

pub mod config;
pub mod experiments;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};

pub use config::{validate, Cli, ExperimentConfig};
pub use output::{Cell, ResultRow, Schema};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Compute(#[from] amo_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

/// Row counts of a finished run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub rows: usize,
    pub failed: usize,
}

/// Validates, computes on `workers` threads and returns the rows.
pub fn evaluate(config: &ExperimentConfig) -> Result<(Schema, Vec<ResultRow>), RunError> {
    let problems = validate(config);
    if !problems.is_empty() {
        return Err(RunError::Invalid(problems));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.common().workers)
        .build()?;
    Ok(pool.install(|| experiments::compute(config))?)
}

/// Runs the experiment and writes its output.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let (schema, rows) = evaluate(config)?;
    let c = config.common();
    // Build the whole output first so a failed run never leaves a partial file.
    let mut buf = Vec::new();
    output::write_rows(&mut buf, c.format, &schema, &rows)?;
    if c.output.as_os_str() == "-" {
        io::stdout().lock().write_all(&buf)?;
    } else {
        let mut w = BufWriter::new(File::create(&c.output)?);
        w.write_all(&buf)?;
        w.flush()?;
    }
    Ok(RunSummary {
        rows: rows.len(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
    })
}
