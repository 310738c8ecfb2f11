use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sqz_core::fitting::{fit_report, initial_guess, CovarianceMode};
use sqz_core::{fit, FitDataset, FitOptions, FitResult, FreqInterval, NormalizedSpectrum, OpoParams};

use crate::error::{exit, CliError, CliResult};
use crate::output::{display_path, write_atomic, write_json};

pub const FIT_JSON: &str = "fit.json";
pub const FIT_REPORT: &str = "fit_report.txt";

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Normalized squeezed spectrum (CSV from `sqz normalize`).
    #[arg(long)]
    pub squeezed: PathBuf,
    /// Normalized anti-squeezed spectrum.
    #[arg(long)]
    pub antisqueezed: PathBuf,
    /// Exclude `lo_hz:hi_hz` from the fit; repeatable.
    #[arg(long = "mask", value_name = "LO:HI")]
    pub masks: Vec<FreqInterval>,
    /// Starting point `gamma_hz,x,eta`; estimated from the data when absent.
    #[arg(long, value_name = "GAMMA,X,ETA")]
    pub init: Option<String>,
    #[arg(long, default_value_t = FitOptions::default().max_iterations)]
    pub max_iter: usize,
    /// Jittered restarts tried when the first start does not converge.
    #[arg(long, default_value_t = FitOptions::default().multistart)]
    pub multistart: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Covariance estimator.
    #[arg(long, default_value = "residual", value_name = "residual|sandwich")]
    pub covariance: CovarianceMode,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitInputs {
    pub squeezed: String,
    pub antisqueezed: String,
}

/// Contents of `fit.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitRecord {
    pub inputs: FitInputs,
    pub options: FitOptions,
    pub init: OpoParams,
    pub result: FitResult,
}

fn parse_init(s: &str) -> CliResult<OpoParams> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--init `{s}` must be three numbers gamma_hz,x,eta")))?;
    if nums.len() != 3 {
        return Err(CliError::Usage(format!("--init `{s}` must be three numbers gamma_hz,x,eta")));
    }
    Ok(OpoParams::new(nums[0], nums[1], nums[2])?)
}

pub fn run(args: &FitArgs) -> CliResult<u8> {
    let sq = NormalizedSpectrum::read_csv(&args.squeezed)?;
    let anti = NormalizedSpectrum::read_csv(&args.antisqueezed)?;
    let data = FitDataset::new(&sq, &anti, args.masks.clone())?;
    let init = match &args.init {
        Some(s) => parse_init(s)?,
        None => initial_guess(&data)?,
    };
    let options = FitOptions {
        max_iterations: args.max_iter,
        multistart: args.multistart,
        seed: args.seed,
        covariance: args.covariance,
        ..FitOptions::default()
    };
    let result = fit(&data, &init, &options)?;
    let report = fit_report(&result);

    write_atomic(&args.out.join(FIT_REPORT), report.as_bytes())?;
    let converged = result.converged;
    let record = FitRecord {
        inputs: FitInputs {
            squeezed: display_path(&args.squeezed),
            antisqueezed: display_path(&args.antisqueezed),
        },
        options,
        init,
        result,
    };
    write_json(&args.out.join(FIT_JSON), &record)?;
    print!("{report}");
    Ok(if converged { exit::OK } else { exit::NOT_CONVERGED })
}
