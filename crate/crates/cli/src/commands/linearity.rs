use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sqz_core::detector::{linearity_fit, read_manifest, saturation_verdict, Verdict};
use sqz_core::FreqInterval;

use crate::error::CliResult;
use crate::output::{display_path, ghz, write_json};

pub const LINEARITY_JSON: &str = "linearity.json";

#[derive(Debug, Args)]
pub struct LinearityArgs {
    /// CSV with rows `lo_power_w,noise_csv,dark_csv`; paths relative to the manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Frequency band `lo_hz:hi_hz` averaged before the power-law fit.
    #[arg(long, value_name = "LO:HI")]
    pub band: FreqInterval,
    /// Allowed deviation of the exponent from 1 for a shot-limited verdict.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Directory for the JSON sidecar; defaults to the manifest's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BandLevel {
    lo_power_w: f64,
    mean_noise_linear: f64,
}

#[derive(Serialize)]
struct PerFrequency {
    frequency_hz: f64,
    exponent: Option<f64>,
}

#[derive(Serialize)]
struct LinearityRecord {
    manifest: String,
    band: FreqInterval,
    tolerance: f64,
    exponent: f64,
    db_per_doubling: f64,
    verdict: Verdict,
    band_levels: Vec<BandLevel>,
    per_frequency: Vec<PerFrequency>,
}

pub fn run(args: &LinearityArgs) -> CliResult<()> {
    let points = read_manifest(&args.manifest)?;
    let r = linearity_fit(&points, args.band)?;
    let verdict = saturation_verdict(r.exponent, args.tol);

    let out_dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .manifest
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let record = LinearityRecord {
        manifest: display_path(&args.manifest),
        band: args.band,
        tolerance: args.tol,
        exponent: r.exponent,
        db_per_doubling: r.db_per_doubling,
        verdict,
        band_levels: r
            .band_levels
            .iter()
            .map(|&(lo_power_w, mean_noise_linear)| BandLevel { lo_power_w, mean_noise_linear })
            .collect(),
        per_frequency: r
            .per_frequency
            .iter()
            .map(|&(frequency_hz, exponent)| PerFrequency { frequency_hz, exponent })
            .collect(),
    };
    write_json(&out_dir.join(LINEARITY_JSON), &record)?;

    println!(
        "band {} - {} GHz, {} LO powers",
        ghz(args.band.lo),
        ghz(args.band.hi),
        points.len()
    );
    println!("exponent = {:.4}", r.exponent);
    println!("{:.2} dB per doubling, {verdict}", r.db_per_doubling);
    Ok(())
}
