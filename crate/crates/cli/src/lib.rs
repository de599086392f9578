//! Configuration, orchestration and file output for the zero-Mach toolkit.
//!
//! Every subcommand reads one TOML document, runs deterministically from its
//! seed and writes CSV tables plus a `summary.json` into the output
//! directory. The exit status is zero exactly when every asserted check
//! passed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod init;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{dispatch, Command};
pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig};
pub use output::{Check, ReportBundle, Summary};

#[derive(Debug, Parser)]
#[command(name = "zeromach", version, about = "Zero-Mach number solver and Littlewood-Paley toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Size of the worker pool; the default uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum CliCommand {
    /// Forward run with diagnostics and snapshots.
    Run,
    /// Picard linearization over one window.
    Picard,
    /// Lifespan sweep over density amplitudes.
    LifespanScan,
    /// Full verifier battery.
    Verify,
    /// Smoothing-estimate constant for the linear parabolic equation.
    VerifyParabolic,
    /// Transport growth against the exponential bound.
    VerifyTransport,
    /// Besov and Chemin-Lerner norms of saved snapshots.
    Norms,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Run => Command::Run,
            CliCommand::Picard => Command::Picard,
            CliCommand::LifespanScan => Command::LifespanScan,
            CliCommand::Verify => Command::Verify,
            CliCommand::VerifyParabolic => Command::VerifyParabolic,
            CliCommand::VerifyTransport => Command::VerifyTransport,
            CliCommand::Norms => Command::Norms,
        }
    }
}

/// Exit status for a configuration that failed validation.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a check or the experiment itself failed.
pub const EXIT_FAILED: i32 = 1;

fn load_config(cli: &Cli) -> Result<RunConfig, Vec<String>> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| vec![format!("{}: {e}", p.display())])?,
        None => String::new(),
    };
    let mut config = parse_config(&text).map_err(|e| e.0.iter().map(|e| e.to_string()).collect::<Vec<_>>())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Parses arguments, runs the command and writes the bundle. Returns the
/// process exit status.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: worker pool already configured: {e}");
        }
    }
    let command = Command::from(cli.command);
    let bundle = match load_config(&cli) {
        Ok(config) => dispatch(command, &config),
        Err(errors) => {
            let mut b = ReportBundle::new(command.name(), None);
            b.seed = cli.seed.unwrap_or(0);
            for e in errors {
                eprintln!("config error: {e}");
                b.fail(format!("config: {e}"));
            }
            if let Err(e) = b.write(&cli.out) {
                eprintln!("error: writing {}: {e}", cli.out.display());
            }
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = bundle.write(&cli.out) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return EXIT_FAILED;
    }
    let summary = bundle.summary();
    for c in &summary.checks {
        let tag = if c.passed { "ok  " } else { "FAIL" };
        println!("{tag} {} = {:e} ({} {:e})", c.name, c.value, c.relation, c.threshold);
    }
    for f in &bundle.failures {
        println!("FAIL {f}");
    }
    println!(
        "{}: {} -> {}",
        summary.command,
        if summary.passed { "passed" } else { "failed" },
        cli.out.display()
    );
    if summary.passed {
        0
    } else {
        EXIT_FAILED
    }
}
