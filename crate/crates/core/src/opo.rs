//! Below-threshold degenerate OPO output spectrum with detection loss.
//!
//! The pure squeezed/anti-squeezed variances in shot-noise units are
//!
//! ```text
//! V∓(f) = 1 ∓ 4x / ((1 ± x)² + (2f/γ)²)
//! ```
//!
//! with γ the resonator FWHM linewidth in Hz and x = √(P/P_th). Detection
//! loss acts as a beamsplitter: `V_det = η·V + (1 − η)`. Phase jitter is not
//! modeled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Squeezed,
    Antisqueezed,
}

impl Quadrature {
    /// −1 for the squeezed branch, +1 for the anti-squeezed one.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Self::Squeezed => -1.0,
            Self::Antisqueezed => 1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::Squeezed => Self::Antisqueezed,
            Self::Antisqueezed => Self::Squeezed,
        }
    }
}

/// Parameters of one squeeze-laser/detector system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpoParams {
    /// Resonator FWHM linewidth in Hz.
    pub gamma_fwhm: f64,
    /// Normalized pump amplitude √(P/P_th).
    pub x: f64,
    /// Total detection quantum efficiency.
    pub eta: f64,
}

impl OpoParams {
    pub fn new(gamma_fwhm: f64, x: f64, eta: f64) -> Result<Self> {
        let p = Self { gamma_fwhm, x, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma_x(self.gamma_fwhm, self.x)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Domain(format!("eta = {} must lie in (0, 1]", self.eta)));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.gamma_fwhm, self.x, self.eta]
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Self::new(a[0], a[1], a[2])
    }
}

fn check_gamma_x(gamma_fwhm: f64, x: f64) -> Result<()> {
    if !(gamma_fwhm > 0.0 && gamma_fwhm.is_finite()) {
        return Err(Error::Domain(format!("gamma_fwhm = {gamma_fwhm} must be positive")));
    }
    if x >= 1.0 {
        return Err(Error::AboveThreshold(x));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x = {x} must be non-negative")));
    }
    Ok(())
}

#[inline]
pub(crate) fn pure_raw(f: f64, gamma_fwhm: f64, x: f64, q: Quadrature) -> f64 {
    // ((1 ∓ x)² + Ω̃²) / ((1 ± x)² + Ω̃²): same value as 1 ∓ 4x/((1 ± x)² + Ω̃²)
    // without the cancellation near threshold.
    let s = q.sign();
    let w2 = (2.0 * f / gamma_fwhm).powi(2);
    let below = 1.0 - s * x;
    let above = 1.0 + s * x;
    (above * above + w2) / (below * below + w2)
}

#[inline]
pub(crate) fn detected_raw(f: f64, gamma_fwhm: f64, x: f64, eta: f64, q: Quadrature) -> f64 {
    eta * pure_raw(f, gamma_fwhm, x, q) + (1.0 - eta)
}

/// `V_det(up) − V_det(down)` for two parameter vectors `[γ, x, η]`,
/// expanded so the result is built from the parameter differences instead
/// of subtracting two nearly equal variances.
pub(crate) fn detected_difference(f: f64, up: [f64; 3], down: [f64; 3], q: Quadrature) -> f64 {
    let s = q.sign();
    let [gu, xu, eu] = up;
    let [gd, xd, ed] = down;
    let f2 = 4.0 * f * f;
    let (wu, wd) = (f2 / (gu * gu), f2 / (gd * gd));
    // wd − wu = 4f²(γu − γd)(γu + γd)/(γu²γd²)
    let dw = f2 * (gu - gd) * (gu + gd) / (gu * gu * gd * gd);
    let (au, bu) = (1.0 - s * xu, 1.0 + s * xu);
    let (ad, bd) = (1.0 - s * xd, 1.0 + s * xd);
    let (du, dd) = (au * au + wu, ad * ad + wd);
    let dx = xu - xd;
    // N_u·D_d − N_d·D_u with N = b² + w, D = a² + w
    let cross = 2.0 * s * dx * (bu * ad + bd * au) + 4.0 * s * (xu * dw + wu * dx);
    let dp = cross / (du * dd);
    eu * dp + (eu - ed) * (4.0 * s * xd / dd)
}

/// Partial derivatives of the detected variance with respect to
/// `(gamma_fwhm, x, eta)`.
#[inline]
pub(crate) fn detected_gradient(f: f64, gamma_fwhm: f64, x: f64, eta: f64, q: Quadrature) -> [f64; 3] {
    let s = q.sign();
    let w2 = (2.0 * f / gamma_fwhm).powi(2);
    let a = 1.0 - s * x;
    let d = a * a + w2;
    let dv_dx = 4.0 * s * (d + 2.0 * s * x * a) / (d * d);
    let dv_dgamma = s * 8.0 * x * w2 / (gamma_fwhm * d * d);
    let v = 1.0 + s * 4.0 * x / d;
    [eta * dv_dgamma, eta * dv_dx, v - 1.0]
}

/// Variance of the OPO output before detection loss, in shot-noise units.
pub fn variance_pure(f: f64, gamma_fwhm: f64, x: f64, q: Quadrature) -> Result<f64> {
    check_gamma_x(gamma_fwhm, x)?;
    if !f.is_finite() || f < 0.0 {
        return Err(Error::Domain(format!("frequency {f} Hz must be finite and >= 0")));
    }
    Ok(pure_raw(f, gamma_fwhm, x, q))
}

/// Variance seen by the detector with total efficiency `params.eta`.
pub fn variance_detected(f: f64, params: &OpoParams, q: Quadrature) -> Result<f64> {
    params.validate()?;
    let v = variance_pure(f, params.gamma_fwhm, params.x, q)?;
    Ok(params.eta * v + (1.0 - params.eta))
}

/// Loss-limited squeezing `−10·log10(1 − η)` in dB.
pub fn max_squeezing_db(eta: f64) -> Result<f64> {
    if eta >= 1.0 {
        return Err(Error::Domain("squeezing is unbounded at eta = 1".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta = {eta} must be positive")));
    }
    Ok(-db(1.0 - eta))
}

/// Pump parameter that produces `v_plus_db` of anti-squeezing at DC.
///
/// Solves `1 + η·4x/(1−x)² = 10^(v/10)`. With `c = (10^(v/10) − 1)/η` the
/// quadratic `c·x² − (2c+4)·x + c = 0` has roots x and 1/x; the one below
/// one is `c / (1 + √(1+c))²`.
pub fn pump_from_antisqueezing(v_plus_db: f64, eta: f64) -> Result<f64> {
    if !v_plus_db.is_finite() {
        return Err(Error::Domain(format!("anti-squeezing {v_plus_db} dB is not finite")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("eta = {eta} must lie in (0, 1]")));
    }
    if v_plus_db < 0.0 {
        return Err(Error::Inconsistent(format!(
            "anti-squeezing of {v_plus_db} dB has no pump parameter in [0, 1)"
        )));
    }
    let c = (10f64.powf(v_plus_db / 10.0) - 1.0) / eta;
    let r = 1.0 + (1.0 + c).sqrt();
    let x = c / (r * r);
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Inconsistent(format!("root x = {x} outside [0, 1)")));
    }
    Ok(x)
}

/// Frequency at which detected squeezing falls to `threshold_db`.
///
/// Inverts the Lorentzian in closed form: with `k = (1 − 10^(−T/10))/η`
/// the crossing satisfies `(2f/γ)² = 4x/k − (1+x)²`.
pub fn squeeze_bandwidth(params: &OpoParams, threshold_db: f64) -> Result<f64> {
    params.validate()?;
    if !(threshold_db > 0.0 && threshold_db.is_finite()) {
        return Err(Error::Domain(format!(
            "squeezing threshold {threshold_db} dB must be positive"
        )));
    }
    let dc_db = -db(detected_raw(0.0, params.gamma_fwhm, params.x, params.eta, Quadrature::Squeezed));
    if threshold_db > dc_db * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "squeezing never reaches {threshold_db} dB (DC squeezing is {dc_db:.4} dB)"
        )));
    }
    let k = (1.0 - 10f64.powf(-threshold_db / 10.0)) / params.eta;
    let w2 = 4.0 * params.x / k - (1.0 + params.x).powi(2);
    Ok(0.5 * params.gamma_fwhm * w2.max(0.0).sqrt())
}

/// Named multiplicative efficiency contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    components: Vec<(String, f64)>,
    fitted_eta: Option<f64>,
}

impl LossBudget {
    pub fn new(components: Vec<(String, f64)>, fitted_eta: Option<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InsufficientData("a loss budget needs at least one component".into()));
        }
        for (name, e) in &components {
            if !(*e > 0.0 && *e <= 1.0) {
                return Err(Error::Domain(format!("efficiency of `{name}` = {e} must lie in (0, 1]")));
            }
        }
        if let Some(e) = fitted_eta {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Domain(format!("fitted eta = {e} must lie in (0, 1]")));
            }
        }
        Ok(Self { components, fitted_eta })
    }

    pub fn components(&self) -> &[(String, f64)] {
        &self.components
    }

    pub fn fitted_eta(&self) -> Option<f64> {
        self.fitted_eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub product: f64,
    pub fitted_eta: Option<f64>,
    /// `fitted_eta / product`: the efficiency the listed components do not explain.
    pub residual: Option<f64>,
}

pub fn loss_budget_product(budget: &LossBudget) -> BudgetSummary {
    let product = budget.components.iter().map(|(_, e)| e).product::<f64>();
    BudgetSummary {
        product,
        fitted_eta: budget.fitted_eta,
        residual: budget.fitted_eta.map(|e| e / product),
    }
}
