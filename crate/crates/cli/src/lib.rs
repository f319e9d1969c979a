//! Command-line front end: reads a JSON job description, solves every mode
//! (optionally in parallel) and writes a CSV report with a `#`-prefixed
//! header carrying the tool version and the effective configuration.

pub mod config;
pub mod jobs;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, JobConfig, JobKind, Validated};
pub use jobs::{run_job, JobOutput};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failures that end a run, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Io(String),

    #[error("mode n={n} (a_n={a}): {source}")]
    Numerical {
        n: usize,
        a: f64,
        source: gpspectra_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gpspectra",
    version,
    about = "Spectra of Gurtin-Pipkin mode pencils"
)]
pub struct Args {
    /// Job to run.
    #[arg(value_enum)]
    pub job: JobKind,
    /// JSON job description.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides the configured path. Defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads used to solve modes in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

/// Runs one invocation and returns the process exit code.
pub fn run(args: &Args) -> i32 {
    match execute(args) {
        Ok(output) => {
            if output.failures > 0 {
                eprintln!("gpspectra: {} check(s) failed", output.failures);
                1
            } else {
                0
            }
        }
        Err(e) => {
            let kind = match e {
                CliError::Config(_) => "configuration error",
                CliError::Io(_) => "i/o error",
                CliError::Numerical { .. } => "numerical failure",
            };
            eprintln!("gpspectra: {kind}: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<JobOutput, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let cfg = parse_config(&text)?;
    if let Some(job) = cfg.raw.job {
        if job != args.job {
            return Err(CliError::Config(format!(
                "job: configuration is for \"{}\" but \"{}\" was requested",
                job.as_str(),
                args.job.as_str()
            )));
        }
    }
    let output = run_job(args.job, &cfg, args.jobs as usize)?;
    match args.out.as_ref().or(cfg.raw.output.as_ref()) {
        Some(path) => std::fs::write(path, &output.text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(output.text.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    Ok(output)
}
