//! `sqz`: squeezed-light noise spectra from analyzer traces to fitted
//! resonator linewidth and detection efficiency.

mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{budget, fit, linearity, normalize, report, simulate};
use error::{exit, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sqz", version, about = "Squeezed-light spectrum toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dark-correct a trace and normalize it to shot noise.
    Normalize(normalize::NormalizeArgs),
    /// Fit linewidth, pump parameter and efficiency to normalized spectra.
    Fit(fit::FitArgs),
    /// Check detector linearity from an LO-power series.
    Linearity(linearity::LinearityArgs),
    /// Multiply component efficiencies and compare with a fitted one.
    Budget(budget::BudgetArgs),
    /// Generate a synthetic measurement campaign from a scenario file.
    Simulate(simulate::SimulateArgs),
    /// Summarize a fitted run and write plot-ready model curves.
    Report(report::ReportArgs),
}

fn dispatch(cli: &Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Normalize(a) => normalize::run(a).map(|()| exit::OK),
        Command::Fit(a) => fit::run(a),
        Command::Linearity(a) => linearity::run(a).map(|()| exit::OK),
        Command::Budget(a) => budget::run(a).map(|()| exit::OK),
        Command::Simulate(a) => simulate::run(a).map(|()| exit::OK),
        Command::Report(a) => report::run(a).map(|()| exit::OK),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sqz: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
