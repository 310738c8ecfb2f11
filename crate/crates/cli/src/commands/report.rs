use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use sqz_core::fitting::fit_report;
use sqz_core::noise::clearance;
use sqz_core::opo::{max_squeezing_db, squeeze_bandwidth, variance_detected};
use sqz_core::{NormalizedSpectrum, OpoParams, Quadrature, Trace};

use super::fit::{FitRecord, FIT_JSON};
use crate::error::{CliError, CliResult};
use crate::output::{read_json, write_atomic, write_json};

pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const CLEARANCE_CSV: &str = "clearance.csv";
const BANDWIDTH_THRESHOLD_DB: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory holding fit.json and the normalized spectra.
    #[arg(long)]
    pub run: PathBuf,
    /// Normalized squeezed spectrum, relative to the run directory.
    #[arg(long, default_value = "squeezed.normalized.csv")]
    pub squeezed: PathBuf,
    #[arg(long, default_value = "antisqueezed.normalized.csv")]
    pub antisqueezed: PathBuf,
    /// Shot and dark traces for the clearance curve; skipped when absent.
    #[arg(long, default_value = "shot.csv")]
    pub shot: PathBuf,
    #[arg(long, default_value = "dark.csv")]
    pub dark: PathBuf,
    /// What to print on stdout; both files are always written.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Serialize)]
struct ClearanceSummary {
    min_db: f64,
    max_db: f64,
    file: String,
}

#[derive(Serialize)]
struct Summary {
    params: OpoParams,
    sigma: sqz_core::fitting::ParamSigma,
    converged: bool,
    rms_residual_db: f64,
    n_points: usize,
    dc_squeezing_db: f64,
    dc_antisqueezing_db: f64,
    squeeze_bandwidth_threshold_db: f64,
    /// `None` when the DC squeezing never reaches the threshold.
    squeeze_bandwidth_hz: Option<f64>,
    max_squeezing_db: Option<f64>,
    clearance: Option<ClearanceSummary>,
    model_files: Vec<String>,
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn model_csv(s: &NormalizedSpectrum, p: &OpoParams, q: Quadrature, record: &FitRecord) -> CliResult<String> {
    let mut out = String::from("frequency_hz,data_db,model_db,residual_db,valid,masked\n");
    for i in 0..s.len() {
        let f = s.frequencies[i];
        let model = db(variance_detected(f, p, q)?);
        let data = s.rel_power_db[i];
        let masked = record.result.mask.iter().any(|m| m.contains(f));
        let _ = writeln!(
            out,
            "{f},{data},{model},{},{},{}",
            data - model,
            u8::from(s.valid[i]),
            u8::from(masked)
        );
    }
    Ok(out.replace("NaN", "nan"))
}

fn in_run(run: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        run.join(p)
    }
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let fit_path = args.run.join(FIT_JSON);
    if !fit_path.is_file() {
        return Err(CliError::Usage(format!(
            "no fit result at {}; run `sqz fit --out {}` first",
            fit_path.display(),
            args.run.display()
        )));
    }
    let record: FitRecord = read_json(&fit_path)?;
    let p = record.result.params;
    p.validate()?;

    let mut model_files = Vec::new();
    for (file, q, name) in [
        (&args.squeezed, Quadrature::Squeezed, "squeezed.model.csv"),
        (&args.antisqueezed, Quadrature::Antisqueezed, "antisqueezed.model.csv"),
    ] {
        let spectrum = NormalizedSpectrum::read_csv(&in_run(&args.run, file))?;
        write_atomic(&args.run.join(name), model_csv(&spectrum, &p, q, &record)?.as_bytes())?;
        model_files.push(name.to_string());
    }

    let (shot_path, dark_path) = (in_run(&args.run, &args.shot), in_run(&args.run, &args.dark));
    let clearance_summary = if shot_path.is_file() && dark_path.is_file() {
        let c = clearance(&Trace::read_csv(&shot_path)?, &Trace::read_csv(&dark_path)?)?;
        let mut csv = String::from("frequency_hz,clearance_db\n");
        for (f, v) in c.iter() {
            let _ = writeln!(csv, "{f},{v}");
        }
        write_atomic(&args.run.join(CLEARANCE_CSV), csv.as_bytes())?;
        let min_db = c.powers().iter().copied().fold(f64::INFINITY, f64::min);
        let max_db = c.powers().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(ClearanceSummary {
            min_db,
            max_db,
            file: CLEARANCE_CSV.to_string(),
        })
    } else {
        None
    };

    let summary = Summary {
        params: p,
        sigma: record.result.sigma,
        converged: record.result.converged,
        rms_residual_db: record.result.rms_residual_db,
        n_points: record.result.n_points,
        dc_squeezing_db: -db(variance_detected(0.0, &p, Quadrature::Squeezed)?),
        dc_antisqueezing_db: db(variance_detected(0.0, &p, Quadrature::Antisqueezed)?),
        squeeze_bandwidth_threshold_db: BANDWIDTH_THRESHOLD_DB,
        squeeze_bandwidth_hz: squeeze_bandwidth(&p, BANDWIDTH_THRESHOLD_DB).ok(),
        max_squeezing_db: max_squeezing_db(p.eta).ok(),
        clearance: clearance_summary,
        model_files,
    };

    let mut text = fit_report(&record.result);
    let _ = writeln!(text, "inputs: {}, {}", record.inputs.squeezed, record.inputs.antisqueezed);
    let _ = writeln!(
        text,
        "DC squeezing {:.2} dB, DC anti-squeezing {:.2} dB",
        summary.dc_squeezing_db, summary.dc_antisqueezing_db
    );
    match summary.squeeze_bandwidth_hz {
        Some(f) => {
            let _ = writeln!(text, "{BANDWIDTH_THRESHOLD_DB:.0} dB squeeze bandwidth ≈ {:.2} GHz", f / 1e9);
        }
        None => {
            let _ = writeln!(text, "squeezing never reaches {BANDWIDTH_THRESHOLD_DB:.0} dB");
        }
    }
    match summary.max_squeezing_db {
        Some(s) => {
            let _ = writeln!(text, "loss-limited squeezing {s:.1} dB");
        }
        None => text.push_str("loss-limited squeezing unbounded (eta = 1)\n"),
    }
    match &summary.clearance {
        Some(c) => {
            let _ = writeln!(text, "dark-noise clearance {:.1} - {:.1} dB", c.min_db, c.max_db);
        }
        None => text.push_str("dark-noise clearance: no shot/dark traces in run\n"),
    }

    write_atomic(&args.run.join(REPORT_TXT), text.as_bytes())?;
    write_json(&args.run.join(REPORT_JSON), &summary)?;
    match args.format {
        Format::Text => print!("{text}"),
        Format::Json => {
            let json = serde_json::to_string_pretty(&summary).map_err(|source| CliError::Json {
                path: args.run.join(REPORT_JSON),
                source,
            })?;
            println!("{json}");
        }
    }
    Ok(())
}
