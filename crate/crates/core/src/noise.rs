//! dB/linear arithmetic, dark-noise subtraction and shot-noise normalization.
//!
//! All subtraction happens on linear powers. Traces must already share a
//! frequency grid; use [`resample`] explicitly when they do not.
//!
//! Both the measured trace and the shot-noise reference are dark corrected
//! before the ratio is taken, so a normalized value of 0 dB means "equal to
//! the dark-corrected shot noise".

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{require_same_grid, validate_grid, Trace};

/// Converts a power level in dB to a linear power ratio.
pub fn db_to_lin(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::Domain(format!("cannot convert {db} dB to linear")));
    }
    Ok(10f64.powf(db / 10.0))
}

/// Converts a positive linear power ratio to dB.
pub fn lin_to_db(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::Domain(format!("cannot convert ratio {ratio} to dB")));
    }
    Ok(10.0 * ratio.log10())
}

// Unchecked variants for inner loops; `-inf` dB maps to zero power.
#[inline]
pub(crate) fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub(crate) fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// What to do with a point whose linear power is not positive after
/// subtracting dark noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    /// Mark the point invalid and drop it from downstream analysis.
    #[default]
    Flag,
    /// Fail the whole operation.
    Error,
}

impl std::str::FromStr for DegeneratePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flag" => Ok(Self::Flag),
            "error" => Ok(Self::Error),
            other => Err(Error::Parse(format!("unknown policy `{other}` (flag|error)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMethod {
    Nearest,
    Linear,
}

impl std::str::FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Parse(format!("unknown resample method `{other}` (nearest|linear)"))),
        }
    }
}

/// Output of [`dark_correct`]. Invalid points carry `-inf` power.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkCorrected {
    pub trace: Trace,
    pub valid: Vec<bool>,
}

impl DarkCorrected {
    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }
}

/// Subtracts `dark` from `measured` in the linear domain.
pub fn dark_correct(measured: &Trace, dark: &Trace, policy: DegeneratePolicy) -> Result<DarkCorrected> {
    require_same_grid(measured, dark)?;
    let mut powers = Vec::with_capacity(measured.len());
    let mut valid = Vec::with_capacity(measured.len());
    for (i, (&m, &d)) in measured.powers().iter().zip(dark.powers()).enumerate() {
        let diff = lin(m) - lin(d);
        if diff > 0.0 {
            powers.push(db(diff));
            valid.push(true);
        } else {
            if policy == DegeneratePolicy::Error {
                return Err(Error::Domain(format!(
                    "non-positive power after dark subtraction at {} Hz",
                    measured.frequencies()[i]
                )));
            }
            powers.push(f64::NEG_INFINITY);
            valid.push(false);
        }
    }
    if !valid.iter().any(|v| *v) {
        return Err(Error::Empty(format!(
            "dark noise of `{}` is at or above `{}` everywhere",
            dark.label(),
            measured.label()
        )));
    }
    let trace = Trace::new(measured.frequencies().to_vec(), powers, measured.label())?;
    Ok(DarkCorrected { trace, valid })
}

/// Record of how a [`NormalizedSpectrum`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub policy: DegeneratePolicy,
    pub shot_dark_corrected: bool,
    pub resampled: Option<ResampleMethod>,
}

impl Default for Correction {
    fn default() -> Self {
        Self {
            policy: DegeneratePolicy::Flag,
            shot_dark_corrected: true,
            resampled: None,
        }
    }
}

/// Noise power in dB relative to the dark-corrected shot noise.
///
/// `rel_power_db` is NaN wherever `valid` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSpectrum {
    pub frequencies: Vec<f64>,
    pub rel_power_db: Vec<f64>,
    pub valid: Vec<bool>,
    pub correction: Correction,
}

pub const NORMALIZED_HEADER: &str = "frequency_hz,rel_power_db,valid";

impl NormalizedSpectrum {
    pub fn new(frequencies: Vec<f64>, rel_power_db: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        validate_grid(&frequencies)?;
        if rel_power_db.len() != frequencies.len() || valid.len() != frequencies.len() {
            return Err(Error::InvalidTrace("column lengths differ".into()));
        }
        if let Some(i) = (0..valid.len()).find(|&i| valid[i] && !rel_power_db[i].is_finite()) {
            return Err(Error::InvalidTrace(format!(
                "point {i} is flagged valid but has value {}",
                rel_power_db[i]
            )));
        }
        Ok(Self {
            frequencies,
            rel_power_db,
            valid,
            correction: Correction::default(),
        })
    }

    /// Builds a fully valid spectrum.
    pub fn from_values(frequencies: Vec<f64>, rel_power_db: Vec<f64>) -> Result<Self> {
        let valid = vec![true; frequencies.len()];
        Self::new(frequencies, rel_power_db, valid)
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// `(frequency, value)` for valid points in ascending frequency.
    pub fn valid_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len())
            .filter(|&i| self.valid[i])
            .map(|i| (self.frequencies[i], self.rel_power_db[i]))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(40 * self.len() + 40);
        out.push_str(NORMALIZED_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let v = if self.valid[i] { self.rel_power_db[i] } else { f64::NAN };
            let _ = writeln!(out, "{},{},{}", self.frequencies[i], v, u8::from(self.valid[i]));
        }
        out
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
        let header_line = headers.iter().collect::<Vec<_>>().join(",");
        if header_line != NORMALIZED_HEADER {
            return Err(Error::Parse(format!(
                "expected header `{NORMALIZED_HEADER}`, found `{header_line}`"
            )));
        }
        let (mut f, mut v, mut ok) = (Vec::new(), Vec::new(), Vec::new());
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != 3 {
                return Err(Error::Parse(format!("row {}: expected 3 fields", row + 1)));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Parse(format!("row {}: `{s}` is not a number", row + 1)))
            };
            f.push(num(&record[0])?);
            v.push(num(&record[1])?);
            ok.push(match &record[2] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::Parse(format!("row {}: bad valid flag `{other}`", row + 1))),
            });
        }
        Self::new(f, v, ok).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Dark-corrects both `measured` and `shot` and returns their ratio in dB.
pub fn normalize_to_shot(
    measured: &Trace,
    shot: &Trace,
    dark: &Trace,
    policy: DegeneratePolicy,
) -> Result<NormalizedSpectrum> {
    require_same_grid(measured, shot)?;
    require_same_grid(measured, dark)?;
    let n = measured.len();
    let mut rel = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let d = lin(dark.powers()[i]);
        let num = lin(measured.powers()[i]) - d;
        let den = lin(shot.powers()[i]) - d;
        if num > 0.0 && den > 0.0 {
            rel.push(db(num / den));
            valid.push(true);
        } else {
            if policy == DegeneratePolicy::Error {
                return Err(Error::Domain(format!(
                    "non-positive dark-corrected power at {} Hz",
                    measured.frequencies()[i]
                )));
            }
            rel.push(f64::NAN);
            valid.push(false);
        }
    }
    if !valid.iter().any(|v| *v) {
        return Err(Error::Empty(format!(
            "no point of `{}` survives dark correction",
            measured.label()
        )));
    }
    let mut spec = NormalizedSpectrum::new(measured.frequencies().to_vec(), rel, valid)?;
    spec.correction.policy = policy;
    Ok(spec)
}

/// Resamples `t` onto `grid`, interpolating in the dB domain.
pub fn resample(t: &Trace, grid: &[f64], method: ResampleMethod) -> Result<Trace> {
    validate_grid(grid)?;
    let freqs = t.frequencies();
    let (lo, hi) = (freqs[0], freqs[freqs.len() - 1]);
    let mut out = Vec::with_capacity(grid.len());
    for &g in grid {
        if g < lo || g > hi {
            return Err(Error::OutOfRange { requested: g, lo, hi });
        }
        // index of first sample >= g
        let j = freqs.partition_point(|&f| f < g);
        let p = if freqs[j] == g {
            t.powers()[j]
        } else {
            let (f0, f1) = (freqs[j - 1], freqs[j]);
            let (p0, p1) = (t.powers()[j - 1], t.powers()[j]);
            match method {
                ResampleMethod::Nearest => {
                    if g - f0 <= f1 - g {
                        p0
                    } else {
                        p1
                    }
                }
                ResampleMethod::Linear => p0 + (p1 - p0) * (g - f0) / (f1 - f0),
            }
        };
        out.push(p);
    }
    Trace::new(grid.to_vec(), out, t.label())
}

/// Dark-noise clearance: shot minus dark in dB, point by point.
pub fn clearance(shot: &Trace, dark: &Trace) -> Result<Trace> {
    require_same_grid(shot, dark)?;
    let powers = shot.powers().iter().zip(dark.powers()).map(|(s, d)| s - d).collect();
    Trace::new(shot.frequencies().to_vec(), powers, "clearance")
}
