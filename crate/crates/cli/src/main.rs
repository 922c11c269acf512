//! Command line front end for the semantic mapping pipeline.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad invocation or
//! configuration. Log verbosity comes from RUST_LOG.

mod commands;
mod config;
mod error;
mod input;
mod report;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "scmap", version, about = "Semantic communication for real-time 3D mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a codec and write its checkpoint.
    Train(commands::train::Args),
    /// Run edge and cloud in one process over an in-memory wire.
    Simulate(commands::simulate::Args),
    /// Compare gated and gateless codecs across an SNR grid.
    AblateSnr(commands::ablate::Args),
    /// Trajectory error metrics between two TUM files.
    EvalTraj(commands::eval_traj::Args),
    /// Encode frames and stream them to a receiver.
    Edge(commands::edge::Args),
    /// Receive a stream and build the semantic map.
    Cloud(commands::cloud::Args),
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::AblateSnr(args) => commands::ablate::run(args),
        Command::EvalTraj(args) => commands::eval_traj::run(args),
        Command::Edge(args) => commands::edge::run(args),
        Command::Cloud(args) => commands::cloud::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
