//! Seeded synthetic measurement campaigns.
//!
//! Traces are built in the linear domain as `dark + quantum·V`, where the
//! quantum shot-noise level is chosen so that the shot trace sits at
//! `shot_level_dbm` and the dark trace sits `clearance` dB below it. With
//! zero trace noise, [`crate::noise::normalize_to_shot`] therefore returns
//! `10·log10(V)` exactly. Measurement scatter is Gaussian in dB with
//! σ = `trace_noise_sigma_db / √n_averages`, drawn from ChaCha8 seeded with
//! the scenario seed (stream 0 for the spectra, stream 1 for the
//! linearity series).
//!
//! Scenario files are TOML (one `key = value` per line, `[section]`
//! headers). See `docs/scenario.md` for the schema.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detector::{apply_imbalance_delta, ImbalanceModel, LinearityPoint};
use crate::error::{Error, Result};
use crate::noise::{db, lin};
use crate::opo::{detected_raw, OpoParams, Quadrature};
use crate::trace::{validate_grid, Trace};

/// Dark-noise clearance below the shot-noise trace, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Clearance {
    Flat(f64),
    /// Linear in frequency between `(f_hz, clearance_db)` anchors, constant
    /// outside them.
    TwoPoint([[f64; 2]; 2]),
}

impl Clearance {
    pub fn at(&self, f: f64) -> f64 {
        match *self {
            Self::Flat(c) => c,
            Self::TwoPoint([[f1, c1], [f2, c2]]) => {
                if f <= f1 {
                    c1
                } else if f >= f2 {
                    c2
                } else {
                    c1 + (c2 - c1) * (f - f1) / (f2 - f1)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Flat(c) => c > 0.0 && c.is_finite(),
            Self::TwoPoint([[f1, c1], [f2, c2]]) => {
                f1 < f2 && c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "dark clearance {self:?} must be positive (and anchors ordered by frequency)"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: OpoParams,
    pub grid: Vec<f64>,
    pub shot_level_dbm: f64,
    pub dark_clearance_db: Clearance,
    pub trace_noise_sigma_db: f64,
    pub n_averages: u32,
    pub imbalance: Option<ImbalanceModel>,
    /// LO powers (W) of the linearity series.
    pub lo_powers: Vec<f64>,
    /// LO power (W) at which the spectra are taken; defaults to the largest
    /// entry of `lo_powers`.
    pub operating_lo_power: Option<f64>,
    /// Soft-compression knee (W): `P_eff = knee·(1 − exp(−P/knee))`.
    pub saturation_knee: Option<f64>,
    /// Power law of the LO-dependent noise; 1 for shot noise, 2 for
    /// technical LO noise.
    pub lo_noise_exponent: f64,
    pub seed: u64,
}

impl Scenario {
    /// Noiseless scenario with 10 dB flat clearance at a −60 dBm shot level.
    pub fn new(params: OpoParams, grid: Vec<f64>) -> Self {
        Self {
            params,
            grid,
            shot_level_dbm: -60.0,
            dark_clearance_db: Clearance::Flat(10.0),
            trace_noise_sigma_db: 0.0,
            n_averages: 1,
            imbalance: None,
            lo_powers: Vec::new(),
            operating_lo_power: None,
            saturation_knee: None,
            lo_noise_exponent: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        validate_grid(&self.grid)?;
        self.dark_clearance_db.validate()?;
        if !self.shot_level_dbm.is_finite() {
            return Err(Error::Domain("shot level must be finite".into()));
        }
        if !(self.trace_noise_sigma_db >= 0.0 && self.trace_noise_sigma_db.is_finite()) {
            return Err(Error::Domain("trace noise sigma must be >= 0".into()));
        }
        if self.n_averages < 1 {
            return Err(Error::Domain("n_averages must be >= 1".into()));
        }
        if let Some(m) = &self.imbalance {
            ImbalanceModel::new(m.slope, m.amplitude, m.f0, m.width)?;
        }
        for p in self.lo_powers.iter().chain(&self.operating_lo_power).chain(&self.saturation_knee) {
            if !(*p > 0.0 && p.is_finite()) {
                return Err(Error::Domain(format!("power {p} W must be positive")));
            }
        }
        if !(self.lo_noise_exponent > 0.0 && self.lo_noise_exponent.is_finite()) {
            return Err(Error::Domain("lo_noise_exponent must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_sigma_db(&self) -> f64 {
        self.trace_noise_sigma_db / f64::from(self.n_averages).sqrt()
    }

    fn dark_dbm(&self, f: f64) -> f64 {
        self.shot_level_dbm - self.dark_clearance_db.at(f)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: file::ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let s = raw.into_scenario()?;
        s.validate()?;
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub shot: Trace,
    pub dark: Trace,
    pub squeezed: Trace,
    pub antisqueezed: Trace,
    pub linearity: Vec<LinearityPoint>,
}

struct Scatter {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl Scatter {
    fn new(seed: u64, stream: u64, sigma: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, sigma }
    }

    fn apply(&mut self, powers: Vec<f64>) -> Vec<f64> {
        if self.sigma == 0.0 {
            return powers;
        }
        powers
            .into_iter()
            .map(|p| {
                let z: f64 = self.rng.sample(StandardNormal);
                p + self.sigma * z
            })
            .collect()
    }
}

/// Shot, dark, squeezed and anti-squeezed traces plus the linearity series
/// (empty when the scenario lists no LO powers).
pub fn generate_campaign(s: &Scenario) -> Result<Campaign> {
    s.validate()?;
    let p = &s.params;
    let mut scatter = Scatter::new(s.seed, 0, s.effective_sigma_db());

    let dark_db: Vec<f64> = s.grid.iter().map(|&f| s.dark_dbm(f)).collect();
    let shot_lin = lin(s.shot_level_dbm);
    let mut sq = Vec::with_capacity(s.grid.len());
    let mut anti = Vec::with_capacity(s.grid.len());
    for (&f, &d) in s.grid.iter().zip(&dark_db) {
        let dark_lin = lin(d);
        let quantum = shot_lin - dark_lin;
        let mut vs = detected_raw(f, p.gamma_fwhm, p.x, p.eta, Quadrature::Squeezed);
        let mut va = detected_raw(f, p.gamma_fwhm, p.x, p.eta, Quadrature::Antisqueezed);
        if let Some(m) = &s.imbalance {
            let delta = m.delta(f);
            (vs, va) = (apply_imbalance_delta(delta, vs, va), apply_imbalance_delta(delta, va, vs));
        }
        sq.push(db(dark_lin + quantum * vs));
        anti.push(db(dark_lin + quantum * va));
    }

    let shot = scatter.apply(vec![s.shot_level_dbm; s.grid.len()]);
    let dark = scatter.apply(dark_db);
    let sq = scatter.apply(sq);
    let anti = scatter.apply(anti);

    let linearity = if s.lo_powers.is_empty() {
        Vec::new()
    } else {
        generate_linearity_series(s)?
    };

    Ok(Campaign {
        shot: Trace::new(s.grid.clone(), shot, "shot")?,
        dark: Trace::new(s.grid.clone(), dark, "dark")?,
        squeezed: Trace::new(s.grid.clone(), sq, "squeezed")?,
        antisqueezed: Trace::new(s.grid.clone(), anti, "antisqueezed")?,
        linearity,
    })
}

/// Shot-noise traces (signal input blocked) at each LO power with their
/// dark traces. The quantum level at the operating LO power matches the
/// campaign's shot trace.
pub fn generate_linearity_series(s: &Scenario) -> Result<Vec<LinearityPoint>> {
    s.validate()?;
    if s.lo_powers.is_empty() {
        return Err(Error::InsufficientData("scenario lists no LO powers".into()));
    }
    let effective = |p: f64| match s.saturation_knee {
        Some(k) => k * (1.0 - (-p / k).exp()),
        None => p,
    };
    let operating = s
        .operating_lo_power
        .unwrap_or_else(|| s.lo_powers.iter().copied().fold(f64::MIN, f64::max));
    let reference = effective(operating);
    let mut scatter = Scatter::new(s.seed, 1, s.effective_sigma_db());

    let shot_lin = lin(s.shot_level_dbm);
    let mut out = Vec::with_capacity(s.lo_powers.len());
    for &power in &s.lo_powers {
        let scale = (effective(power) / reference).powf(s.lo_noise_exponent);
        let dark_db: Vec<f64> = s.grid.iter().map(|&f| s.dark_dbm(f)).collect();
        let noise_db: Vec<f64> = dark_db
            .iter()
            .map(|&d| db(lin(d) + (shot_lin - lin(d)) * scale))
            .collect();
        let noise = scatter.apply(noise_db);
        let dark = scatter.apply(dark_db);
        out.push(LinearityPoint::new(
            power,
            Trace::new(s.grid.clone(), noise, format!("lo_{power}_noise"))?,
            Trace::new(s.grid.clone(), dark, format!("lo_{power}_dark"))?,
        )?);
    }
    Ok(out)
}

mod file {
    use serde::Deserialize;

    use super::{Clearance, Scenario};
    use crate::detector::ImbalanceModel;
    use crate::error::{Error, Result};
    use crate::opo::OpoParams;

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct ScenarioFile {
        #[serde(default)]
        seed: u64,
        opo: Opo,
        grid: Grid,
        detector: Detector,
        imbalance: Option<Imbalance>,
        linearity: Option<Linearity>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Opo {
        gamma_fwhm_hz: f64,
        x: f64,
        eta: f64,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Grid {
        frequencies_hz: Option<Vec<f64>>,
        start_hz: Option<f64>,
        stop_hz: Option<f64>,
        points: Option<usize>,
        #[serde(default)]
        spacing: Spacing,
    }

    #[derive(Deserialize, Default, Clone, Copy)]
    #[serde(rename_all = "lowercase")]
    enum Spacing {
        #[default]
        Linear,
        Log,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Detector {
        shot_level_dbm: f64,
        dark_clearance_db: Clearance,
        #[serde(default)]
        trace_noise_sigma_db: f64,
        #[serde(default = "one")]
        n_averages: u32,
    }

    fn one() -> u32 {
        1
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Imbalance {
        #[serde(default)]
        slope_rad_per_hz: f64,
        amplitude_rad: f64,
        f0_hz: f64,
        width_hz: f64,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Linearity {
        lo_powers_w: Vec<f64>,
        operating_lo_power_w: Option<f64>,
        saturation_knee_w: Option<f64>,
        noise_exponent: Option<f64>,
    }

    impl Grid {
        fn build(&self) -> Result<Vec<f64>> {
            if let Some(f) = &self.frequencies_hz {
                if self.start_hz.is_some() || self.stop_hz.is_some() || self.points.is_some() {
                    return Err(Error::Parse(
                        "[grid] takes either frequencies_hz or start_hz/stop_hz/points".into(),
                    ));
                }
                return Ok(f.clone());
            }
            let (Some(a), Some(b), Some(n)) = (self.start_hz, self.stop_hz, self.points) else {
                return Err(Error::Parse("[grid] needs start_hz, stop_hz and points".into()));
            };
            if n < 2 {
                return Err(Error::Parse("[grid] points must be >= 2".into()));
            }
            let last = (n - 1) as f64;
            Ok((0..n)
                .map(|i| {
                    let t = i as f64 / last;
                    match self.spacing {
                        Spacing::Linear => a + (b - a) * t,
                        Spacing::Log => a * (b / a).powf(t),
                    }
                })
                .collect())
        }
    }

    impl ScenarioFile {
        pub(super) fn into_scenario(self) -> Result<Scenario> {
            let params = OpoParams::new(self.opo.gamma_fwhm_hz, self.opo.x, self.opo.eta)?;
            let mut s = Scenario::new(params, self.grid.build()?);
            s.seed = self.seed;
            s.shot_level_dbm = self.detector.shot_level_dbm;
            s.dark_clearance_db = self.detector.dark_clearance_db;
            s.trace_noise_sigma_db = self.detector.trace_noise_sigma_db;
            s.n_averages = self.detector.n_averages;
            if let Some(m) = self.imbalance {
                s.imbalance = Some(ImbalanceModel::new(
                    m.slope_rad_per_hz,
                    m.amplitude_rad,
                    m.f0_hz,
                    m.width_hz,
                )?);
            }
            if let Some(l) = self.linearity {
                s.lo_powers = l.lo_powers_w;
                s.operating_lo_power = l.operating_lo_power_w;
                s.saturation_knee = l.saturation_knee_w;
                s.lo_noise_exponent = l.noise_exponent.unwrap_or(1.0);
            }
            Ok(s)
        }
    }
}

/// Linear grid of `n` points over `[start, stop]`.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n).map(|i| start + (stop - start) * i as f64 / last).collect()
}
