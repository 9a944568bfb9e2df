use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use valdist::cli::{run, RunOptions};

#[derive(Parser)]
#[command(name = "valdist", version, about = "Value-distribution laboratory for meromorphic functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a JSON configuration file.
    Run {
        config: PathBuf,
        /// Output directory (overrides settings.out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run tasks concurrently.
        #[arg(long)]
        parallel: bool,
        /// Seed for randomized contour nudges (overrides settings.seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, out, parallel, seed, verbose } = cli.command;
    let summary = run(&RunOptions { config, out, parallel, seed, verbose });
    ExitCode::from(summary.exit_code as u8)
}
