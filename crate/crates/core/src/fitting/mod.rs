//! Joint least-squares fit of [`OpoParams`] to normalized squeezed and
//! anti-squeezed spectra.
//!
//! Residuals are `data_dB − 10·log10(V_det)` with uniform weights. The
//! minimizer is a Levenberg–Marquardt iteration (Gauss–Newton with
//! Marquardt diagonal damping) over unconstrained coordinates
//! `(ln γ, logit x, logit η)`, so the bounds `γ > 0`, `x ∈ (0, 1)` and
//! `η ∈ (0, 1)` hold without clipping. The covariance is
//! `s²·(JᵀJ)⁻¹` in those coordinates, with `s² = Σr²/(n − 3)`, mapped back
//! through the diagonal transform Jacobian.

mod report;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{db, lin, NormalizedSpectrum};
use crate::opo::{detected_difference, detected_gradient, detected_raw, pump_from_antisqueezing, OpoParams, Quadrature};

pub use report::{fit_report, format_value_sigma};

pub const PARAM_NAMES: [&str; 3] = ["gamma_fwhm", "x", "eta"];

/// Condition number of the scaled normal matrix above which a fit is
/// reported as poorly constrained.
pub const CONDITION_WARN: f64 = 1e8;
/// Above this the normal matrix is treated as singular.
pub const CONDITION_SINGULAR: f64 = 1e15;

const DB_PER_NEPER: f64 = 10.0 / std::f64::consts::LN_10;

/// Closed frequency interval `[lo, hi]` in Hz excluded from a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FreqInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("mask interval [{lo}, {hi}] is not well formed")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }
}

impl FromStr for FreqInterval {
    type Err = Error;

    /// Parses `lo_hz:hi_hz`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("interval `{s}` must look like lo_hz:hi_hz")))?;
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("`{t}` in interval `{s}` is not a number")))
        };
        Self::new(num(lo)?, num(hi)?).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl fmt::Display for FreqInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// One observation entering the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub frequency: f64,
    pub value_db: f64,
    pub quadrature: Quadrature,
}

/// Observations plus the intervals excluded from the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDataset {
    points: Vec<DataPoint>,
    mask: Vec<FreqInterval>,
}

impl FitDataset {
    /// Joint dataset; points are ordered squeezed (ascending f) then
    /// anti-squeezed (ascending f).
    pub fn new(
        squeezed: &NormalizedSpectrum,
        antisqueezed: &NormalizedSpectrum,
        mask: Vec<FreqInterval>,
    ) -> Result<Self> {
        let mut points = spectrum_points(squeezed, Quadrature::Squeezed);
        points.extend(spectrum_points(antisqueezed, Quadrature::Antisqueezed));
        Self::from_points(points, mask)
    }

    pub fn squeezed_only(squeezed: &NormalizedSpectrum, mask: Vec<FreqInterval>) -> Result<Self> {
        Self::from_points(spectrum_points(squeezed, Quadrature::Squeezed), mask)
    }

    /// Builds a dataset from raw points, keeping their order. Every
    /// quadrature present must keep at least three unmasked points.
    pub fn from_points(points: Vec<DataPoint>, mask: Vec<FreqInterval>) -> Result<Self> {
        for m in &mask {
            FreqInterval::new(m.lo, m.hi)?;
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.frequency.is_finite() && p.frequency >= 0.0 && p.value_db.is_finite()))
        {
            return Err(Error::Domain(format!("bad data point {p:?}")));
        }
        let data = Self { points, mask };
        let mut any = false;
        for q in [Quadrature::Squeezed, Quadrature::Antisqueezed] {
            let total = data.points.iter().filter(|p| p.quadrature == q).count();
            let used = data.active().filter(|p| p.quadrature == q).count();
            if total > 0 && used < 3 {
                return Err(Error::InsufficientData(format!(
                    "{q:?} quadrature has {used} unmasked valid points; at least 3 are needed"
                )));
            }
            any |= used > 0;
        }
        if !any {
            return Err(Error::InsufficientData("dataset has no points".into()));
        }
        Ok(data)
    }

    pub fn mask(&self) -> &[FreqInterval] {
        &self.mask
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn is_masked(&self, f: f64) -> bool {
        self.mask.iter().any(|m| m.contains(f))
    }

    /// Points that enter the fit, in residual order.
    pub fn active(&self) -> impl Iterator<Item = &DataPoint> + '_ {
        self.points.iter().filter(move |p| !self.is_masked(p.frequency))
    }

    pub fn n_active(&self) -> usize {
        self.active().count()
    }

    pub fn has(&self, q: Quadrature) -> bool {
        self.active().any(|p| p.quadrature == q)
    }
}

fn spectrum_points(s: &NormalizedSpectrum, q: Quadrature) -> Vec<DataPoint> {
    s.valid_points()
        .map(|(frequency, value_db)| DataPoint {
            frequency,
            value_db,
            quadrature: q,
        })
        .collect()
}

fn residuals_raw(p: [f64; 3], data: &FitDataset) -> DVector<f64> {
    DVector::from_iterator(
        data.n_active(),
        data.active()
            .map(|d| d.value_db - db(detected_raw(d.frequency, p[0], p[1], p[2], d.quadrature))),
    )
}

/// dB residuals `data − model` for every active point.
pub fn residuals(params: &OpoParams, data: &FitDataset) -> Result<Vec<f64>> {
    params.validate()?;
    Ok(residuals_raw(params.as_array(), data).as_slice().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    #[default]
    Analytic,
    FiniteDifference,
}

/// Relative step used by the central-difference Jacobian.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

fn jacobian_raw(p: [f64; 3], data: &FitDataset, mode: JacobianMode) -> Result<DMatrix<f64>> {
    let n = data.n_active();
    match mode {
        JacobianMode::Analytic => {
            let mut j = DMatrix::zeros(n, 3);
            for (i, d) in data.active().enumerate() {
                let v = detected_raw(d.frequency, p[0], p[1], p[2], d.quadrature);
                let g = detected_gradient(d.frequency, p[0], p[1], p[2], d.quadrature);
                for k in 0..3 {
                    j[(i, k)] = -DB_PER_NEPER * g[k] / v;
                }
            }
            Ok(j)
        }
        JacobianMode::FiniteDifference => {
            let mut j = DMatrix::zeros(n, 3);
            for k in 0..3 {
                let h = if p[k] == 0.0 { FD_RELATIVE_STEP } else { FD_RELATIVE_STEP * p[k].abs() };
                let (mut up, mut down) = (p, p);
                up[k] += h;
                down[k] -= h;
                let span = up[k] - down[k];
                if !(span > 0.0) {
                    return Err(Error::Numeric(format!(
                        "finite-difference step underflows for {} = {}",
                        PARAM_NAMES[k], p[k]
                    )));
                }
                // r(up) − r(down) = −10·log10(V₊/V₋); the ratio is formed from an
                // expanded V₊ − V₋ so rounding does not swamp small columns.
                for (i, d) in data.active().enumerate() {
                    let vd = detected_raw(d.frequency, down[0], down[1], down[2], d.quadrature);
                    let dv = detected_difference(d.frequency, up, down, d.quadrature);
                    j[(i, k)] = -DB_PER_NEPER * (dv / vd).ln_1p() / span;
                }
            }
            Ok(j)
        }
    }
}

/// Jacobian of [`residuals`] with respect to `(gamma_fwhm, x, eta)`,
/// one row per active point.
pub fn jacobian(params: &OpoParams, data: &FitDataset, mode: JacobianMode) -> Result<DMatrix<f64>> {
    params.validate()?;
    jacobian_raw(params.as_array(), data, mode)
}

/// Largest element-wise relative deviation between two Jacobians.
///
/// Elements that are zero to within `1e-12` of their column's largest
/// magnitude in both matrices are skipped.
pub fn max_relative_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0f64;
    for k in 0..a.ncols() {
        let scale = a.column(k).amax().max(b.column(k).amax());
        for i in 0..a.nrows() {
            let (x, y) = (a[(i, k)], b[(i, k)]);
            let m = x.abs().max(y.abs());
            if m <= 1e-12 * scale {
                continue;
            }
            worst = worst.max((x - y).abs() / m);
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when an accepted step lowers the cost by less than this
    /// fraction.
    pub cost_tolerance: f64,
    /// Converged when the step in transformed coordinates is shorter than this.
    pub step_tolerance: f64,
    /// Jittered restarts tried when the first start does not converge.
    pub multistart: usize,
    pub seed: u64,
    pub jacobian: JacobianMode,
    pub covariance: CovarianceMode,
}

/// How the parameter covariance is estimated at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// `s²·(JᵀJ)⁻¹` with the pooled residual variance.
    #[default]
    Residual,
    /// `(JᵀJ)⁻¹·(Σ rᵢ² jᵢjᵢᵀ)·(JᵀJ)⁻¹ · n/(n−3)`. Holds up when the scatter
    /// differs between points, e.g. squeezed bins close to the dark floor.
    Sandwich,
}

impl FromStr for CovarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(Self::Residual),
            "sandwich" => Ok(Self::Sandwich),
            _ => Err(Error::Parse(format!("unknown covariance mode `{s}` (residual|sandwich)"))),
        }
    }
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-12,
            multistart: 5,
            seed: 0,
            jacobian: JacobianMode::Analytic,
            covariance: CovarianceMode::Residual,
        }
    }
}

/// 1σ uncertainties in the units of [`OpoParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSigma {
    pub gamma_fwhm: f64,
    pub x: f64,
    pub eta: f64,
}

impl ParamSigma {
    pub fn as_array(&self) -> [f64; 3] {
        [self.gamma_fwhm, self.x, self.eta]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: OpoParams,
    pub sigma: ParamSigma,
    /// Row-major covariance over `(gamma_fwhm, x, eta)`.
    pub covariance: [[f64; 3]; 3],
    pub rms_residual_db: f64,
    pub n_points: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Half the sum of squared residuals.
    pub cost: f64,
    /// Condition number of the column-normalized `JᵀJ`.
    pub condition_number: f64,
    pub warnings: Vec<String>,
    pub mask: Vec<FreqInterval>,
    /// Cost after every accepted iteration, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Index of the start that produced this result (0 is the caller's init).
    pub start_index: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

const UNIT_CLAMP: (f64, f64) = (1e-9, 1.0 - 1e-9);

fn to_internal(p: &OpoParams) -> Vector3<f64> {
    let x = p.x.clamp(UNIT_CLAMP.0, UNIT_CLAMP.1);
    let eta = p.eta.clamp(UNIT_CLAMP.0, UNIT_CLAMP.1);
    Vector3::new(p.gamma_fwhm.ln(), logit(x), logit(eta))
}

fn from_internal(u: &Vector3<f64>) -> [f64; 3] {
    [u[0].exp(), logistic(u[1]), logistic(u[2])]
}

/// Diagonal of ∂(natural)/∂(internal).
fn transform_diag(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1] * (1.0 - p[1]), p[2] * (1.0 - p[2]))
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

fn finite_params(p: [f64; 3]) -> bool {
    p[0].is_finite() && p[0] > 0.0 && p[1] > 0.0 && p[1] < 1.0 && p[2] > 0.0 && p[2] <= 1.0
}

struct Descent {
    u: Vector3<f64>,
    cost: f64,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
}

fn descend(data: &FitDataset, init: &OpoParams, opts: &FitOptions) -> Result<Descent> {
    let mut u = to_internal(init);
    let mut p = from_internal(&u);
    let mut r = residuals_raw(p, data);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Numeric("initial residuals are not finite".into()));
    }
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations && !converged {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let jn = jacobian_raw(p, data, opts.jacobian)?;
        let t = transform_diag(p);
        let ju = scale_columns(&jn, &t);
        let a: Matrix3<f64> = fixed3(&(ju.transpose() * &ju));
        let g: Vector3<f64> = fixed3v(&(ju.transpose() * &r));
        let dmax = a.diagonal().max();
        let damp = a.diagonal().map(|d| d.max(1e-12 * dmax).max(f64::MIN_POSITIVE));

        loop {
            let mut m = a;
            for k in 0..3 {
                m[(k, k)] += lambda * damp[k];
            }
            let step = match m.cholesky() {
                Some(ch) => -ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e20 {
                        converged = true;
                        break;
                    }
                    continue;
                }
            };
            if step.norm() < opts.step_tolerance * (u.norm() + opts.step_tolerance) {
                converged = true;
                break;
            }
            let u_new = u + step;
            let p_new = from_internal(&u_new);
            let r_new = residuals_raw(p_new, data);
            let cost_new = cost_of(&r_new);
            if finite_params(p_new) && cost_new.is_finite() && cost_new < cost {
                let rel = (cost - cost_new) / cost;
                u = u_new;
                p = p_new;
                r = r_new;
                cost = cost_new;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                if rel < opts.cost_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // no descent direction left at working precision
                converged = true;
                break;
            }
        }
    }
    Ok(Descent {
        u,
        cost,
        converged,
        iterations,
        history,
    })
}

fn scale_columns(j: &DMatrix<f64>, s: &Vector3<f64>) -> DMatrix<f64> {
    let mut out = j.clone();
    for k in 0..3 {
        out.column_mut(k).scale_mut(s[k]);
    }
    out
}

fn fixed3(m: &DMatrix<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, k| m[(i, k)])
}

fn fixed3v(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// Condition number of the column-normalized normal matrix and the
/// eigenvector of its smallest eigenvalue.
pub(crate) fn conditioning(jn: &DMatrix<f64>) -> (f64, Vector3<f64>) {
    let mut norms = Vector3::zeros();
    for k in 0..3 {
        norms[k] = jn.column(k).norm();
    }
    if norms.iter().any(|n| *n == 0.0 || !n.is_finite()) {
        let k = norms.iter().position(|n| *n == 0.0 || !n.is_finite()).unwrap();
        let mut v = Vector3::zeros();
        v[k] = 1.0;
        return (f64::INFINITY, v);
    }
    let scaled = scale_columns(jn, &norms.map(|n| 1.0 / n));
    let a = fixed3(&(scaled.transpose() * &scaled));
    let eig = a.symmetric_eigen();
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let lmax = eig.eigenvalues.max();
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    (cond, eig.eigenvectors.column(imin).into_owned())
}

fn describe_direction(v: &Vector3<f64>) -> String {
    let terms: Vec<String> = (0..3)
        .filter(|&k| v[k].abs() > 0.2)
        .map(|k| format!("{:+.2}·{}", v[k], PARAM_NAMES[k]))
        .collect();
    if terms.len() == 1 {
        PARAM_NAMES[(0..3).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap()].to_string()
    } else {
        format!("the combination {}", terms.join(" "))
    }
}

fn finish(data: &FitDataset, d: Descent, start_index: usize, mode: CovarianceMode) -> Result<FitResult> {
    let p = from_internal(&d.u);
    let params = OpoParams {
        gamma_fwhm: p[0],
        x: p[1],
        eta: p[2],
    };
    let jn = jacobian_raw(p, data, JacobianMode::Analytic)?;
    let (condition_number, weak) = conditioning(&jn);
    if !(condition_number < CONDITION_SINGULAR) {
        return Err(Error::Degenerate {
            direction: describe_direction(&weak),
            condition: condition_number,
        });
    }
    let mut warnings = Vec::new();
    if condition_number > CONDITION_WARN {
        warnings.push(format!(
            "poorly constrained fit: condition number {condition_number:.3e} exceeds {CONDITION_WARN:.0e}; weakest direction is {}",
            describe_direction(&weak)
        ));
    }
    if !d.converged {
        warnings.push(format!("did not converge within {} iterations", d.iterations));
    }

    let n = data.n_active();
    let t = transform_diag(p);
    let ju = scale_columns(&jn, &t);
    let a = fixed3(&(ju.transpose() * &ju));
    let inv = a.try_inverse().ok_or_else(|| Error::Degenerate {
        direction: describe_direction(&weak),
        condition: condition_number,
    })?;
    let dof = n.saturating_sub(3).max(1) as f64;
    let cov_u = match mode {
        CovarianceMode::Residual => inv * (2.0 * d.cost / dof),
        CovarianceMode::Sandwich => {
            let r = residuals_raw(p, data);
            let mut meat = Matrix3::zeros();
            for (i, ri) in r.iter().enumerate() {
                let row = Vector3::new(ju[(i, 0)], ju[(i, 1)], ju[(i, 2)]);
                meat += row * row.transpose() * (ri * ri);
            }
            inv * meat * inv * (n as f64 / dof)
        }
    };
    let tm = Matrix3::from_diagonal(&t);
    let mut cov = tm * cov_u * tm;
    cov = (cov + cov.transpose()) * 0.5;
    let covariance = [
        [cov[(0, 0)], cov[(0, 1)], cov[(0, 2)]],
        [cov[(1, 0)], cov[(1, 1)], cov[(1, 2)]],
        [cov[(2, 0)], cov[(2, 1)], cov[(2, 2)]],
    ];
    let sigma = ParamSigma {
        gamma_fwhm: cov[(0, 0)].max(0.0).sqrt(),
        x: cov[(1, 1)].max(0.0).sqrt(),
        eta: cov[(2, 2)].max(0.0).sqrt(),
    };
    Ok(FitResult {
        params,
        sigma,
        covariance,
        rms_residual_db: (2.0 * d.cost / n as f64).sqrt(),
        n_points: n,
        converged: d.converged,
        iterations: d.iterations,
        cost: d.cost,
        condition_number,
        warnings,
        mask: data.mask.clone(),
        cost_history: d.history,
        start_index,
    })
}

/// Fits `(γ, x, η)` starting from `init`.
///
/// When the first start fails to converge, up to `options.multistart`
/// jittered starts are tried and the lowest-cost one is kept (ties go to
/// the lowest start index).
pub fn fit(data: &FitDataset, init: &OpoParams, options: &FitOptions) -> Result<FitResult> {
    init.validate()?;
    let first = descend(data, init, options)?;
    if first.converged {
        return finish(data, first, 0, options.covariance);
    }
    let mut best = (0usize, first);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let jitter = Normal::new(0.0, 0.3).expect("valid normal");
    let base = to_internal(init);
    for k in 1..=options.multistart {
        let u = base + Vector3::from_fn(|_, _| jitter.sample(&mut rng));
        let p = from_internal(&u);
        let start = OpoParams {
            gamma_fwhm: p[0],
            x: p[1],
            eta: p[2],
        };
        let Ok(d) = descend(data, &start, options) else { continue };
        let better = match (d.converged, best.1.converged) {
            (true, false) => true,
            (false, true) => false,
            _ => d.cost < best.1.cost,
        };
        if better {
            best = (k, d);
        }
    }
    finish(data, best.1, best.0, options.covariance)
}

/// Starting values read off the data.
///
/// x from DC anti-squeezing, η from the DC squeezing floor given that x,
/// x re-solved with that η, then γ from the frequency at which the
/// anti-squeezed excess drops to half its DC value (`f½ = γ(1 − x)/2`).
pub fn initial_guess(data: &FitDataset) -> Result<OpoParams> {
    let mut sq: Vec<(f64, f64)> = Vec::new();
    let mut anti: Vec<(f64, f64)> = Vec::new();
    for p in data.active() {
        match p.quadrature {
            Quadrature::Squeezed => sq.push((p.frequency, p.value_db)),
            Quadrature::Antisqueezed => anti.push((p.frequency, p.value_db)),
        }
    }
    sq.sort_by(|a, b| a.0.total_cmp(&b.0));
    anti.sort_by(|a, b| a.0.total_cmp(&b.0));

    let low_median = |pts: &[(f64, f64)]| -> f64 {
        let k = (pts.len() / 20).clamp(1, 5);
        let mut v: Vec<f64> = pts[..k].iter().map(|p| p.1).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };

    let sq_dc = if sq.is_empty() { None } else { Some(lin(low_median(&sq))) };
    let eta_from = |x: f64| -> f64 {
        match sq_dc {
            Some(v) if x > 0.0 => ((1.0 - v) * (1.0 + x).powi(2) / (4.0 * x)).clamp(0.05, 0.999),
            _ => 0.9,
        }
    };

    let (x, gamma) = if anti.is_empty() {
        // Squeezed only: assume strong pumping and take γ from where the
        // squeezing has decayed to half its DC depth.
        let x = 0.8;
        let v0 = sq_dc.unwrap_or(0.5);
        let half = 1.0 - 0.5 * (1.0 - v0);
        let f_half = crossing(&sq, |v| lin(v) >= half);
        (x, 2.0 * f_half / (1.0 + x))
    } else {
        let a_dc = low_median(&anti).max(1e-3);
        let mut x = pump_from_antisqueezing(a_dc, 1.0).unwrap_or(0.5);
        let eta = eta_from(x);
        x = pump_from_antisqueezing(a_dc, eta).unwrap_or(x).clamp(0.01, 0.99);
        let excess_dc = lin(a_dc) - 1.0;
        let f_half = crossing(&anti, |v| lin(v) - 1.0 <= 0.5 * excess_dc);
        (x, 2.0 * f_half / (1.0 - x))
    };
    let x = x.clamp(0.01, 0.99);
    OpoParams::new(gamma.max(1.0), x, eta_from(x))
}

/// First frequency where `pred` holds, interpolated between samples;
/// the last frequency when it never does.
fn crossing(pts: &[(f64, f64)], pred: impl Fn(f64) -> bool) -> f64 {
    match pts.iter().position(|p| pred(p.1)) {
        Some(0) => pts[0].0.max(1.0),
        Some(i) => 0.5 * (pts[i - 1].0 + pts[i].0),
        None => pts.last().map(|p| p.0).unwrap_or(1e9),
    }
}

#[cfg(test)]
mod tests;
