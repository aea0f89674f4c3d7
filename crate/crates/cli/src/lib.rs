//! Command-line front end for the `seqbin` experiments.
//!
//! Subcommands:
//!
//! - `exponents`: theory tables for the configured models.
//! - `simulate`: Monte-Carlo delay-error and computation statistics.
//! - `verify`: randomized property suites.
//!
//! Exit codes: `0` success, `1` I/O or verification failure, `2` invalid
//! configuration, `3` every trial hit the computation caps.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod verify;

pub use config::{BiasSpec, Mode, Resolved, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("all {0} trials hit the computation caps")]
    Degenerate(u64),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] seqbin_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::VerifyFailed(_) | CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "seqbin",
    version,
    about = "Sequential binning with side information"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seeds.master` in the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, value_name = "K")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write exponent tables, bias ranges and the Pareto root.
    Exponents,
    /// Run the Monte-Carlo experiment and write pe.csv, comp.csv, summary.json.
    Simulate,
    /// Run the randomized property suites.
    Verify,
    /// Compare the decoder with exhaustive search on small instances.
    #[command(hide = true)]
    Oracle {
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long, default_value_t = 200)]
        instances: u64,
    },
}

fn load(cli: &Cli) -> Result<Resolved, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seeds.master = seed;
    }
    config.resolve()
}

fn out_dir(cli: &Cli, r: &Resolved) -> Result<PathBuf, CliError> {
    cli.out
        .clone()
        .or_else(|| r.config.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Exponents => {
            let r = load(cli)?;
            let out = out_dir(cli, &r)?;
            let s = commands::cmd_exponents(&r, &out)?;
            Ok(format!(
                "exponent {:.6} at rho {:.4}; default bias (gamma=1) {:.6}; wrote {}",
                s.theory.exponent.exponent,
                s.theory.exponent.rho_star,
                s.theory.default_bias_gamma1,
                out.display()
            ))
        }
        Command::Simulate => {
            let r = load(cli)?;
            let out = out_dir(cli, &r)?;
            let s = commands::cmd_simulate(&r, &out)?;
            let fit = |f: &Option<seqbin_core::sim::Fit>| {
                f.as_ref()
                    .map(|f| format!("{:.4} +/- {:.4}", f.exponent, f.std_error))
                    .unwrap_or_else(|| "n/a".into())
            };
            Ok(format!(
                "delay exponent {}; pareto exponent {}; cap aborts {}; wrote {}",
                fit(&s.report.fitted_delay_exponent),
                fit(&s.report.fitted_pareto_exponent),
                s.report.cap_abort_count,
                out.display()
            ))
        }
        Command::Verify => {
            let master = match (&cli.config, cli.seed) {
                (_, Some(seed)) => seed,
                (Some(_), None) => load(cli)?.master_seed(),
                (None, None) => 0,
            };
            let report = commands::cmd_verify(master, cli.out.as_deref())?;
            let lines: Vec<String> = report
                .suites
                .iter()
                .map(|s| {
                    format!(
                        "{:<28} {:>4} cases, {} violations",
                        s.name, s.cases, s.violations
                    )
                })
                .collect();
            Ok(lines.join("\n"))
        }
        Command::Oracle { horizon, instances } => {
            let r = load(cli)?;
            commands::cmd_oracle(&r, *horizon, *instances)
        }
    }
}

/// Executes a parsed command line and returns the text for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match cli.workers {
        Some(0) => Err(CliError::Config("--workers must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {k} workers: {e}")))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}
