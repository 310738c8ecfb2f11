use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use sqz_core::opo::{max_squeezing_db, squeeze_bandwidth, variance_detected};
use sqz_core::synth::{generate_campaign, Scenario};
use sqz_core::{OpoParams, Quadrature, Trace};

use crate::error::{CliError, CliResult};
use crate::output::{display_path, ensure_dir, ghz, write_atomic, write_json};

pub const SEED_ENV: &str = "SQZ_SEED";
pub const TRUTH_JSON: &str = "truth.json";
pub const MANIFEST: &str = "linearity/manifest.csv";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Derived {
    dc_squeezing_db: f64,
    dc_antisqueezing_db: f64,
    max_squeezing_db: Option<f64>,
    squeeze_bandwidth_3db_hz: Option<f64>,
}

#[derive(Serialize)]
struct Truth {
    scenario: String,
    seed: u64,
    params: OpoParams,
    derived: Derived,
    shot_level_dbm: f64,
    effective_sigma_db: f64,
    files: Vec<String>,
}

fn seed_override() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn write_trace(out: &Path, name: &str, t: &Trace, files: &mut Vec<String>) -> CliResult<()> {
    write_atomic(&out.join(name), t.to_csv_string().as_bytes())?;
    files.push(name.to_string());
    Ok(())
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let mut scenario = Scenario::read(&args.scenario)?;
    if let Some(seed) = seed_override()? {
        scenario.seed = seed;
    }
    let campaign = generate_campaign(&scenario)?;
    ensure_dir(&args.out)?;

    let mut files = Vec::new();
    write_trace(&args.out, "shot.csv", &campaign.shot, &mut files)?;
    write_trace(&args.out, "dark.csv", &campaign.dark, &mut files)?;
    write_trace(&args.out, "squeezed.csv", &campaign.squeezed, &mut files)?;
    write_trace(&args.out, "antisqueezed.csv", &campaign.antisqueezed, &mut files)?;
    if !campaign.linearity.is_empty() {
        let mut manifest = String::from("lo_power_w,noise_csv,dark_csv\n");
        for (i, p) in campaign.linearity.iter().enumerate() {
            let noise = format!("noise_{i:02}.csv");
            let dark = format!("dark_{i:02}.csv");
            write_trace(&args.out, &format!("linearity/{noise}"), &p.noise, &mut files)?;
            write_trace(&args.out, &format!("linearity/{dark}"), &p.dark, &mut files)?;
            manifest.push_str(&format!("{},{noise},{dark}\n", p.lo_power));
        }
        write_atomic(&args.out.join(MANIFEST), manifest.as_bytes())?;
        files.push(MANIFEST.to_string());
    }

    let p = scenario.params;
    let derived = Derived {
        dc_squeezing_db: -db(variance_detected(0.0, &p, Quadrature::Squeezed)?),
        dc_antisqueezing_db: db(variance_detected(0.0, &p, Quadrature::Antisqueezed)?),
        max_squeezing_db: max_squeezing_db(p.eta).ok(),
        squeeze_bandwidth_3db_hz: squeeze_bandwidth(&p, 3.0).ok(),
    };
    println!("ground truth (seed {})", scenario.seed);
    println!("gamma_fwhm = {} GHz", ghz(p.gamma_fwhm));
    println!("x = {:.4}", p.x);
    println!("eta = {:.4}", p.eta);
    println!(
        "DC squeezing {:.2} dB, DC anti-squeezing {:.2} dB",
        derived.dc_squeezing_db, derived.dc_antisqueezing_db
    );
    let truth = Truth {
        scenario: display_path(&args.scenario),
        seed: scenario.seed,
        params: p,
        derived,
        shot_level_dbm: scenario.shot_level_dbm,
        effective_sigma_db: scenario.effective_sigma_db(),
        files,
    };
    write_json(&args.out.join(TRUTH_JSON), &truth)?;
    println!("wrote {} files to {}", truth.files.len() + 1, args.out.display());
    Ok(())
}
