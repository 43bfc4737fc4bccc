//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, configuration or input-file
//! errors, 2 for failures during a run.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "antsight", version, about = "Antenna inspection tracking, uplink modelling and UAV coverage planning")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Global {
    /// TOML configuration file for the subcommand.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Write a synthetic mission: detections, IMU, labels and a mission config.
    Generate,
    /// Run tracking, keyframe selection and the uplink model for one mode.
    Track,
    /// Plan multi-UAV coverage paths.
    Plan,
    /// Tabulate convolution costs.
    Cost,
    /// Run the uplink model for several modes on one mission.
    Compare,
}

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    pub fn config(error: Error) -> Self {
        Self { code: 1, error }
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        Self { code: if error.is_config() { 1 } else { 2 }, error }
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Generate => commands::generate(g),
        Command::Track => commands::track(g),
        Command::Plan => commands::plan(g),
        Command::Cost => commands::cost(g),
        Command::Compare => commands::compare(g),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}
