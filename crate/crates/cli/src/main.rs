//! `hdqkd` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod output;
mod rates;
mod run;
mod tomography;

use output::Format;

#[derive(Parser)]
#[command(name = "hdqkd", version, about = "High-dimensional QKD simulation and analysis")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Output format for data written to stdout and summary files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Directory for generated files.
    #[arg(long, global = true, env = "HDQKD_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded prepare-and-measure session.
    Run(run::RunArgs),
    /// Secret key rates, one row or the full protocol comparison table.
    Rates(rates::RatesArgs),
    /// Tolerable error rates by bisection.
    Thresholds,
    /// Process tomography and Singapore mutual information.
    Tomography(tomography::TomographyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run::cmd_run(args, &cli.common),
        Command::Rates(args) => rates::cmd_rates(args, &cli.common),
        Command::Thresholds => rates::cmd_thresholds(&cli.common),
        Command::Tomography(args) => tomography::cmd_tomography(args, &cli.common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
