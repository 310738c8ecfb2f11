use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sqz_core::noise::{normalize_to_shot, resample, ResampleMethod};
use sqz_core::{DegeneratePolicy, Trace};

use crate::error::CliResult;
use crate::output::{display_path, write_atomic, write_json};

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Measured noise trace (CSV: frequency_hz,power_dbm).
    #[arg(long)]
    pub measured: PathBuf,
    /// Shot-noise reference trace.
    #[arg(long)]
    pub shot: PathBuf,
    /// Dark-noise trace.
    #[arg(long)]
    pub dark: PathBuf,
    /// Output file stem; defaults to the measured file's stem.
    #[arg(long)]
    pub label: Option<String>,
    /// Put shot and dark onto the measured grid instead of requiring a common grid.
    #[arg(long, value_name = "nearest|linear")]
    pub resample: Option<ResampleMethod>,
    /// What to do with bins where dark noise is not below the signal.
    #[arg(long, default_value = "flag", value_name = "flag|error")]
    pub policy: DegeneratePolicy,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Inputs {
    measured: String,
    shot: String,
    dark: String,
}

#[derive(Serialize)]
struct Summary {
    label: String,
    inputs: Inputs,
    policy: DegeneratePolicy,
    resample: Option<ResampleMethod>,
    points: usize,
    invalid_points: usize,
    output: String,
}

pub fn run(args: &NormalizeArgs) -> CliResult<()> {
    let measured = Trace::read_csv(&args.measured)?;
    let mut shot = Trace::read_csv(&args.shot)?;
    let mut dark = Trace::read_csv(&args.dark)?;
    if let Some(method) = args.resample {
        shot = resample(&shot, measured.frequencies(), method)?;
        dark = resample(&dark, measured.frequencies(), method)?;
    }
    let mut spectrum = normalize_to_shot(&measured, &shot, &dark, args.policy)?;
    spectrum.correction.resampled = args.resample;

    let label = args.label.clone().unwrap_or_else(|| measured.label().to_string());
    let csv_path = args.out.join(format!("{label}.normalized.csv"));
    write_atomic(&csv_path, spectrum.to_csv_string().as_bytes())?;

    let invalid = spectrum.len() - spectrum.valid_count();
    let summary = Summary {
        label: label.clone(),
        inputs: Inputs {
            measured: display_path(&args.measured),
            shot: display_path(&args.shot),
            dark: display_path(&args.dark),
        },
        policy: args.policy,
        resample: args.resample,
        points: spectrum.len(),
        invalid_points: invalid,
        output: display_path(&csv_path),
    };
    write_json(&args.out.join(format!("{label}.summary.json")), &summary)?;
    println!(
        "{label}: {} points, {invalid} invalid -> {}",
        spectrum.len(),
        csv_path.display()
    );
    Ok(())
}
