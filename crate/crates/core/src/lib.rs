//! Modeling, calibration and fitting of broadband squeezed-vacuum noise
//! spectra recorded with a balanced homodyne detector.
//!
//! - [`noise`]: dB/linear arithmetic, dark-noise subtraction and shot-noise
//!   normalization of analyzer traces.
//! - [`opo`]: below-threshold OPO squeezing spectrum with detection loss,
//!   loss limits and loss budgets.
//! - [`fitting`]: joint least-squares fit of linewidth, pump parameter and
//!   efficiency with covariance-based uncertainties.
//! - [`detector`]: LO-power linearity analysis and a phase-imbalance model.
//! - [`synth`]: seeded synthetic measurement campaigns.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod fitting;
pub mod noise;
pub mod opo;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use fitting::{fit, CovarianceMode, FitDataset, FitOptions, FitResult, FreqInterval};
pub use noise::{NormalizedSpectrum, DegeneratePolicy};
pub use opo::{OpoParams, Quadrature};
pub use trace::Trace;
