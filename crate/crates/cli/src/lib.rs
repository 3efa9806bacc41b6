//! `maxcorr` command line: `stat`, `simulate` and `oracle`.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate data (constant
//! columns), 4 failed assertion or verdict, 5 Monte Carlo refusal, 1
//! anything else.

use std::ffi::OsString;

use clap::{CommandFactory, Parser, Subcommand};

mod manifest;
mod oracle_cmd;
mod simulate;
mod stat;

pub use manifest::RunManifest;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "MAXCORR_THREADS";

pub mod exit {
    pub const OK: u8 = 0;
    pub const INTERNAL: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const DEGENERATE: u8 = 3;
    pub const ASSERTION: u8 = 4;
    pub const REFUSED: u8 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "maxcorr", version, about = "Max-entry statistics of sample correlation matrices, moment/series oracles and limit-theorem simulations")]
struct Cli {
    /// Cap on worker threads; 0 or unset uses one per core
    #[arg(long, global = true, env = THREADS_ENV, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute L_n, W_n, T_n or the correlation matrix of a CSV file
    Stat(stat::StatArgs),
    /// Run a Monte Carlo experiment over a grid of sample sizes
    Simulate(simulate::SimulateArgs),
    /// Run one of the moment/series checks and print a JSON report
    #[command(subcommand)]
    Oracle(oracle_cmd::OracleCommand),
}

/// The full clap command, for help rendering and introspection.
pub fn command() -> clap::Command {
    Cli::command()
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    if let Some(t) = cli.threads.filter(|&t| t > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    let outcome = match &cli.command {
        Command::Stat(a) => stat::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Oracle(c) => oracle_cmd::run(c),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use maxcorr::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::ZeroVariance { .. }) => exit::DEGENERATE,
        Some(Error::Refused(_)) => exit::REFUSED,
        Some(Error::Quadrature(_)) => exit::INTERNAL,
        _ => exit::INPUT,
    }
}
