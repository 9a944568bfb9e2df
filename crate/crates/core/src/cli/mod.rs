//! Batch driver: reads a JSON run configuration, executes its tasks and writes
//! one JSON report per task plus CSV side files.
//!
//! Exit codes: [`EXIT_OK`] when every task completed (whatever the audits
//! concluded), [`EXIT_CONFIG`] for a configuration that does not parse or
//! validate, [`EXIT_NUMERIC`] when at least one task failed numerically, and
//! [`EXIT_IO`] when reading or writing files failed.

pub mod config;
mod run;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

pub use config::{ConfigError, RunConfig};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Command-line options of `valdist run`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub parallel: bool,
    pub seed: Option<u64>,
    pub verbose: bool,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: String,
    message: String,
}

#[derive(Serialize)]
struct Envelope<'a> {
    task: &'a str,
    kind: &'a str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
}

/// Name of the error variant, e.g. `NonConvergent`.
fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

/// What a run produced.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub exit_code: i32,
    pub reports: Vec<PathBuf>,
    pub failed_tasks: Vec<String>,
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs a configuration file. Diagnostics go to stderr.
pub fn run(opts: &RunOptions) -> RunSummary {
    let fail = |code: i32, msg: String| {
        eprintln!("valdist: {msg}");
        RunSummary { exit_code: code, ..RunSummary::default() }
    };
    let text = match fs::read_to_string(&opts.config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", opts.config.display())),
    };
    let cfg = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e.0),
    };
    let decls = match cfg.resolve() {
        Ok(d) => d,
        Err(e) => return fail(EXIT_CONFIG, e.0),
    };
    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.settings.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("valdist-out"));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        return fail(EXIT_IO, format!("{}: {e}", out_dir.display()));
    }
    let seed = opts.seed.unwrap_or(cfg.settings.seed);

    let exec = |task: &config::TaskConfig| {
        if opts.verbose {
            eprintln!("valdist: running {} ({})", task.name(), task.kind());
        }
        run::execute(&cfg, &decls, task, seed)
    };
    let results: Vec<_> = if opts.parallel {
        cfg.tasks.par_iter().map(exec).collect()
    } else {
        cfg.tasks.iter().map(exec).collect()
    };

    let mut summary = RunSummary::default();
    for (task, outcome) in cfg.tasks.iter().zip(results) {
        let name = task.name();
        let (envelope, csv) = match outcome {
            Ok(out) => (
                Envelope { task: name, kind: task.kind(), status: "ok", result: Some(out.result), error: None },
                out.csv,
            ),
            Err(e) => {
                eprintln!("valdist: task {name} failed: {e}");
                summary.failed_tasks.push(name.to_string());
                let body = ErrorBody { kind: error_kind(&e), message: e.to_string() };
                (Envelope { task: name, kind: task.kind(), status: "error", result: None, error: Some(body) }, vec![])
            }
        };
        let mut text = serde_json::to_string_pretty(&envelope).expect("envelope serializes");
        text.push('\n');
        let path = out_dir.join(format!("{name}.json"));
        if let Err(e) = write(&path, &text) {
            return fail(EXIT_IO, e);
        }
        summary.reports.push(path);
        for (suffix, body) in csv {
            let path = out_dir.join(format!("{name}{suffix}.csv"));
            if let Err(e) = write(&path, &body) {
                return fail(EXIT_IO, e);
            }
        }
    }
    summary.exit_code = if summary.failed_tasks.is_empty() { EXIT_OK } else { EXIT_NUMERIC };
    summary
}
