//! Balanced-homodyne-detector diagnostics.
//!
//! [`linearity_fit`] regresses dark-corrected shot noise against local
//! oscillator power on a log-log scale: an exponent of 1 (3.01 dB per
//! doubling) is quantum-noise-limited operation, 2 (6.02 dB) means the noise
//! is dominated by technical LO noise and values below 1 point to
//! saturation.
//!
//! [`ImbalanceModel`] is a minimal phase-error model for the two photodiode
//! channels. A frequency-dependent phase error δ(f) mixes the target
//! quadrature with the orthogonal one, which washes squeezing out near
//! electronic resonances.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::FreqInterval;
use crate::noise::lin;
use crate::trace::{require_same_grid, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityPoint {
    /// Local-oscillator power in W.
    pub lo_power: f64,
    pub noise: Trace,
    pub dark: Trace,
}

impl LinearityPoint {
    pub fn new(lo_power: f64, noise: Trace, dark: Trace) -> Result<Self> {
        if !(lo_power > 0.0 && lo_power.is_finite()) {
            return Err(Error::Domain(format!("LO power {lo_power} W must be positive")));
        }
        require_same_grid(&noise, &dark)?;
        Ok(Self { lo_power, noise, dark })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityResult {
    /// Power-law exponent of band-averaged noise versus LO power.
    pub exponent: f64,
    pub db_per_doubling: f64,
    /// `(frequency, exponent)` for every bin of the shared grid; `None`
    /// where some corrected power is not positive.
    pub per_frequency: Vec<(f64, Option<f64>)>,
    /// `(lo_power, band-mean corrected linear noise)` used in the regression.
    pub band_levels: Vec<(f64, f64)>,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits the exponent of dark-corrected noise power versus LO power over
/// `band`.
pub fn linearity_fit(points: &[LinearityPoint], band: FreqInterval) -> Result<LinearityResult> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.lo_power).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "linearity needs at least 2 distinct LO powers, got {}",
            distinct.len()
        )));
    }
    let grid = points[0].noise.frequencies();
    for p in points {
        require_same_grid(&points[0].noise, &p.noise)?;
        require_same_grid(&p.noise, &p.dark)?;
    }
    let in_band: Vec<usize> = (0..grid.len()).filter(|&i| band.contains(grid[i])).collect();
    if in_band.is_empty() {
        return Err(Error::Empty(format!("no frequency bins inside {band}")));
    }

    let corrected: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            p.noise
                .powers()
                .iter()
                .zip(p.dark.powers())
                .map(|(n, d)| lin(*n) - lin(*d))
                .collect()
        })
        .collect();

    let log_p: Vec<f64> = points.iter().map(|p| p.lo_power.log10()).collect();
    let mut band_levels = Vec::with_capacity(points.len());
    let mut log_n = Vec::with_capacity(points.len());
    for (p, c) in points.iter().zip(&corrected) {
        let mean = in_band.iter().map(|&i| c[i]).sum::<f64>() / in_band.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::Domain(format!(
                "band-averaged dark-corrected noise at {} W is not positive",
                p.lo_power
            )));
        }
        band_levels.push((p.lo_power, mean));
        log_n.push(mean.log10());
    }
    let exponent = slope(&log_p, &log_n);

    let per_frequency = (0..grid.len())
        .map(|i| {
            let ys: Option<Vec<f64>> = corrected
                .iter()
                .map(|c| (c[i] > 0.0).then(|| c[i].log10()))
                .collect();
            (grid[i], ys.map(|ys| slope(&log_p, &ys)))
        })
        .collect();

    Ok(LinearityResult {
        exponent,
        db_per_doubling: exponent * 10.0 * 2f64.log10(),
        per_frequency,
        band_levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ShotLimited,
    Technical,
    Saturating,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ShotLimited => "shot_limited",
            Self::Technical => "technical",
            Self::Saturating => "saturating",
        })
    }
}

pub fn saturation_verdict(exponent: f64, tol: f64) -> Verdict {
    if (exponent - 1.0).abs() <= tol {
        Verdict::ShotLimited
    } else if exponent < 1.0 - tol {
        Verdict::Saturating
    } else {
        Verdict::Technical
    }
}

/// Inter-channel phase error `δ(f) = slope·f + a·(f·w)² / ((f₀² − f²)² + (f·w)²)`.
///
/// The resonance term peaks at `a` radians at `f₀` with width of order `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceModel {
    /// rad/Hz
    pub slope: f64,
    /// Peak phase error of the resonance, rad.
    pub amplitude: f64,
    pub f0: f64,
    pub width: f64,
}

impl ImbalanceModel {
    pub fn new(slope: f64, amplitude: f64, f0: f64, width: f64) -> Result<Self> {
        if !(f0 > 0.0 && width > 0.0) {
            return Err(Error::Domain(format!(
                "resonance f0 = {f0} and width = {width} must be positive"
            )));
        }
        if !(slope.is_finite() && amplitude.is_finite()) {
            return Err(Error::Domain("imbalance slope and amplitude must be finite".into()));
        }
        Ok(Self {
            slope,
            amplitude,
            f0,
            width,
        })
    }

    /// No phase error at any frequency.
    pub fn none() -> Self {
        Self {
            slope: 0.0,
            amplitude: 0.0,
            f0: 1.0,
            width: 1.0,
        }
    }

    pub fn delta(&self, f: f64) -> f64 {
        let fw2 = (f * self.width).powi(2);
        let detune = self.f0 * self.f0 - f * f;
        self.slope * f + self.amplitude * fw2 / (detune * detune + fw2)
    }
}

/// Measured variance when the detector phase error at `f` mixes the
/// target quadrature with the orthogonal one.
pub fn apply_imbalance_delta(delta: f64, v_target: f64, v_orthogonal: f64) -> f64 {
    let c2 = (0.5 * delta).cos().powi(2);
    c2 * v_target + (1.0 - c2) * v_orthogonal
}

/// `(measured squeezed, measured anti-squeezed)` variances at `f`.
pub fn apply_imbalance(model: &ImbalanceModel, v_sqz: f64, v_anti: f64, f: f64) -> Result<(f64, f64)> {
    if !(v_sqz > 0.0 && v_anti > 0.0) {
        return Err(Error::Domain("variances must be positive".into()));
    }
    let d = model.delta(f);
    Ok((apply_imbalance_delta(d, v_sqz, v_anti), apply_imbalance_delta(d, v_anti, v_sqz)))
}

/// Reads a linearity manifest: one `lo_power_w,noise_csv,dark_csv` row per
/// LO power. Relative paths resolve against the manifest's directory. An
/// optional header row with those column names and `#` comments are allowed.
pub fn read_manifest(path: &Path) -> Result<Vec<LinearityPoint>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != 3 {
            return Err(Error::Parse(format!("manifest row {}: expected 3 fields", row + 1)));
        }
        if &rec[0] == "lo_power_w" {
            continue;
        }
        let power: f64 = rec[0]
            .parse()
            .map_err(|_| Error::Parse(format!("manifest row {}: bad power `{}`", row + 1, &rec[0])))?;
        let noise = Trace::read_csv(&base.join(&rec[1]))?;
        let dark = Trace::read_csv(&base.join(&rec[2]))?;
        out.push(LinearityPoint::new(power, noise, dark)?);
    }
    Ok(out)
}
