//! `lrclab`: train LRC-regularized MLPs, estimate Rademacher complexities, and
//! check the LRC bound chains on saved networks.

mod args;
mod dataspec;
mod error;
mod io;
mod lab;
mod tools;
mod train;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliResult;

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| error::CliError::usage(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Train(a) => train::run(a),
        Command::EstimateRc(a) => lab::estimate(a),
        Command::VerifyBounds(a) => lab::verify(a),
        Command::Gradcheck(a) => tools::gradcheck(a),
        Command::GenData(a) => tools::gen_data(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code as u8)
        }
    }
}
