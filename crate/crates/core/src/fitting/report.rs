use std::fmt::Write as _;

use super::FitResult;

/// Formats `value ± sigma` with the uncertainty rounded to one or two
/// significant digits (two when its leading digits are below 36) and the
/// value rounded to the same decimal place.
///
/// A sigma below `1e-6` of the value is printed as `± <1e-6 (relative)`.
pub fn format_value_sigma(value: f64, sigma: f64) -> String {
    if !sigma.is_finite() {
        return format!("{value} ± {sigma}");
    }
    if sigma <= 1e-6 * value.abs() {
        return format!("{value:.9} ± <1e-6 (relative)");
    }
    let exp = sigma.log10().floor() as i32;
    let leading = (sigma / 10f64.powi(exp - 1)).round() as i64;
    let digits = if leading < 36 { 2 } else { 1 };
    let decimals = (digits - 1 - exp).max(0) as usize;
    format!("{value:.decimals$} ± {sigma:.decimals$}")
}

/// Human-readable summary of a fit.
pub fn fit_report(result: &FitResult) -> String {
    let mut out = String::new();
    if !result.converged {
        out.push_str("*** FIT DID NOT CONVERGE: values below are the last iterate ***\n");
    }
    let _ = writeln!(
        out,
        "OPO spectrum fit ({} points, {} iterations, {})",
        result.n_points,
        result.iterations,
        if result.converged { "converged" } else { "not converged" }
    );
    let p = &result.params;
    let s = &result.sigma;
    let _ = writeln!(
        out,
        "gamma_fwhm = {} GHz",
        format_value_sigma(p.gamma_fwhm / 1e9, s.gamma_fwhm / 1e9)
    );
    let _ = writeln!(out, "x = {}", format_value_sigma(p.x, s.x));
    let _ = writeln!(out, "eta = {} %", format_value_sigma(p.eta * 100.0, s.eta * 100.0));
    let _ = writeln!(out, "rms residual = {:.4} dB", result.rms_residual_db);
    let _ = writeln!(out, "condition number = {:.3e}", result.condition_number);
    if result.mask.is_empty() {
        out.push_str("masked ranges: none\n");
    } else {
        out.push_str("masked ranges:\n");
        for m in &result.mask {
            let _ = writeln!(out, "  {:.4} - {:.4} GHz", m.lo / 1e9, m.hi / 1e9);
        }
    }
    for w in &result.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
