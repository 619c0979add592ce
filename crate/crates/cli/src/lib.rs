//! Experiment runner: configuration, commands and report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::ffi::OsString;

use clap::Parser;
use roompass_core::Report;

use config::{Cli, ExperimentConfig};
use error::{CliError, CliResult};
use output::{commit, Artifact};

/// Caps rayon's pool at `RP_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("RP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("RP_THREADS = `{v}` must be a positive integer")))?;
    // a second initialisation (tests calling in-process) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Prints the check table to stderr and returns the JSON artifact, if a
/// report path was configured.
pub fn emit_report(report: &Report, cfg: &ExperimentConfig) -> CliResult<Option<Artifact>> {
    eprint!("{}", report.summary());
    for c in report.failures() {
        eprintln!("check failed: {}", c.name);
    }
    match &cfg.report {
        Some(p) => {
            let mut s = report.to_json()?;
            s.push('\n');
            Ok(Some(Artifact::file(p, s.into_bytes())))
        }
        None => Ok(None),
    }
}

fn execute(cfg: &ExperimentConfig) -> CliResult<i32> {
    let mut out = commands::run(cfg)?;
    for (name, tol) in &cfg.tol {
        if !out.report.set_tolerance(name, *tol) {
            return Err(CliError::Config(format!("--tol: no check named `{name}`")));
        }
    }
    if let Some(a) = emit_report(&out.report, cfg)? {
        out.artifacts.push(a);
    }
    commit(&out.artifacts)?;
    Ok(out.report.exit_code())
}

/// Parses `args`, runs the command and returns the process exit status:
/// 0 all checks passed, 1 a check or the computation failed, 2 the
/// configuration was invalid.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads()
        .and_then(|_| ExperimentConfig::resolve(cli.command, cli.flags))
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("roompass: {e}");
            e.exit_code()
        }
    }
}
