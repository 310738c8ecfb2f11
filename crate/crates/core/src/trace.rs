//! Sampled power spectra and their CSV representation.
//!
//! A trace file is UTF-8 CSV with the header `frequency_hz,power_dbm`, one
//! sample per row. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "frequency_hz,power_dbm";

/// A power spectrum in dBm on a strictly increasing frequency grid.
///
/// Powers may be `-inf`, meaning "no power" (for example a point whose
/// linear power vanished after dark-noise subtraction). NaN and `+inf` are
/// rejected. Files read from disk must be entirely finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    frequencies: Vec<f64>,
    powers: Vec<f64>,
    label: String,
}

impl Trace {
    pub fn new(frequencies: Vec<f64>, powers: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        validate_grid(&frequencies)?;
        if powers.len() != frequencies.len() {
            return Err(Error::InvalidTrace(format!(
                "{} frequencies but {} powers",
                frequencies.len(),
                powers.len()
            )));
        }
        if let Some(i) = powers.iter().position(|p| p.is_nan() || *p == f64::INFINITY) {
            return Err(Error::InvalidTrace(format!("power at index {i} is {}", powers[i])));
        }
        Ok(Self {
            frequencies,
            powers,
            label: label.into(),
        })
    }

    /// A trace with the same power at every grid point.
    pub fn flat(frequencies: Vec<f64>, power_dbm: f64, label: impl Into<String>) -> Result<Self> {
        let powers = vec![power_dbm; frequencies.len()];
        Self::new(frequencies, powers, label)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Returns a copy with `offset_db` added to every power.
    pub fn offset(&self, offset_db: f64) -> Self {
        Self {
            frequencies: self.frequencies.clone(),
            powers: self.powers.iter().map(|p| p + offset_db).collect(),
            label: self.label.clone(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frequencies.iter().copied().zip(self.powers.iter().copied())
    }

    pub fn from_csv_reader<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
        let header_line = headers.iter().collect::<Vec<_>>().join(",");
        if header_line != TRACE_HEADER {
            return Err(Error::Parse(format!(
                "expected header `{TRACE_HEADER}`, found `{header_line}`"
            )));
        }
        let mut frequencies = Vec::new();
        let mut powers = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::Parse(format!("row {}: expected 2 fields", row + 1)));
            }
            let f = parse_finite(&record[0], row)?;
            let p = parse_finite(&record[1], row)?;
            frequencies.push(f);
            powers.push(p);
        }
        Self::new(frequencies, powers, label).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a trace file; the label defaults to the file stem.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv_reader(file, label)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(32 * self.len() + 32);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for (f, p) in self.iter() {
            let _ = writeln!(out, "{f},{p}");
        }
        out
    }
}

fn parse_finite(field: &str, row: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::Parse(format!("row {}: `{field}` is not a number", row + 1)))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {}: non-finite value `{field}`", row + 1)));
    }
    Ok(v)
}

/// Checks the frequency-grid invariants shared by every spectrum type.
pub fn validate_grid(frequencies: &[f64]) -> Result<()> {
    if frequencies.len() < 2 {
        return Err(Error::InvalidTrace(format!(
            "need at least 2 samples, got {}",
            frequencies.len()
        )));
    }
    for (i, f) in frequencies.iter().enumerate() {
        if !f.is_finite() || *f <= 0.0 {
            return Err(Error::InvalidTrace(format!("frequency at index {i} is {f}")));
        }
    }
    if let Some(i) = frequencies.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTrace(format!(
            "frequencies not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Relative tolerance used when deciding whether two grids are the same.
const GRID_RTOL: f64 = 1e-9;

pub fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= GRID_RTOL * x.abs().max(y.abs()))
}

pub(crate) fn require_same_grid(a: &Trace, b: &Trace) -> Result<()> {
    if same_grid(a.frequencies(), b.frequencies()) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "`{}` ({} points) and `{}` ({} points) are sampled on different grids",
            a.label(),
            a.len(),
            b.label(),
            b.len()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Trace::new(vec![1.0], vec![0.0], "").is_err());
        assert!(Trace::new(vec![1.0, 1.0], vec![0.0, 0.0], "").is_err());
        assert!(Trace::new(vec![0.0, 1.0], vec![0.0, 0.0], "").is_err());
        assert!(Trace::new(vec![2.0, 1.0], vec![0.0, 0.0], "").is_err());
        assert!(Trace::new(vec![1.0, 2.0], vec![0.0], "").is_err());
        assert!(Trace::new(vec![1.0, 2.0], vec![f64::NAN, 0.0], "").is_err());
        assert!(Trace::new(vec![1.0, 2.0], vec![f64::INFINITY, 0.0], "").is_err());
        assert!(Trace::new(vec![1.0, 2.0], vec![f64::NEG_INFINITY, 0.0], "").is_ok());
    }

    #[test]
    fn csv_with_comments() {
        let text = "# analyzer export\nfrequency_hz,power_dbm\n1e6,-80.5\n# pickup\n2e6, -81\n";
        let t = Trace::from_csv_reader(text.as_bytes(), "x").unwrap();
        assert_eq!(t.frequencies(), &[1e6, 2e6]);
        assert_eq!(t.powers(), &[-80.5, -81.0]);
        let back = Trace::from_csv_reader(t.to_csv_string().as_bytes(), "x").unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            Trace::from_csv_reader("freq,power\n1,2\n3,4\n".as_bytes(), ""),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Trace::from_csv_reader("frequency_hz,power_dbm\n1,abc\n3,4\n".as_bytes(), ""),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Trace::from_csv_reader("frequency_hz,power_dbm\n1,inf\n3,4\n".as_bytes(), ""),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Trace::from_csv_reader("frequency_hz,power_dbm\n1,1\n".as_bytes(), ""),
            Err(Error::Parse(_))
        ));
    }
}
