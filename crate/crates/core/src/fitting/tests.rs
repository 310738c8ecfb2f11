use super::*;
use crate::noise::NormalizedSpectrum;
use crate::synth::linear_grid;
use approx::assert_abs_diff_eq;

fn sys2() -> OpoParams {
    OpoParams::new(1.75e9, 0.81, 0.858).unwrap()
}

fn model_spectrum(p: &OpoParams, grid: &[f64], q: Quadrature) -> NormalizedSpectrum {
    let v = grid
        .iter()
        .map(|&f| db(crate::opo::variance_detected(f, p, q).unwrap()))
        .collect();
    NormalizedSpectrum::from_values(grid.to_vec(), v).unwrap()
}

fn joint(p: &OpoParams, grid: &[f64], mask: Vec<FreqInterval>) -> FitDataset {
    FitDataset::new(
        &model_spectrum(p, grid, Quadrature::Squeezed),
        &model_spectrum(p, grid, Quadrature::Antisqueezed),
        mask,
    )
    .unwrap()
}

fn noisy_joint(p: &OpoParams, grid: &[f64], sigma: f64, seed: u64) -> FitDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    let mut jitter = |s: NormalizedSpectrum| {
        let v = s.rel_power_db.iter().map(|v| v + n.sample(&mut rng)).collect();
        NormalizedSpectrum::from_values(s.frequencies.clone(), v).unwrap()
    };
    let sq = jitter(model_spectrum(p, grid, Quadrature::Squeezed));
    let an = jitter(model_spectrum(p, grid, Quadrature::Antisqueezed));
    FitDataset::new(&sq, &an, vec![]).unwrap()
}

fn perturbed(p: &OpoParams, factor: [f64; 3]) -> OpoParams {
    OpoParams::new(p.gamma_fwhm * factor[0], p.x * factor[1], p.eta * factor[2]).unwrap()
}

#[test]
fn residual_examples() {
    let p = sys2();
    let grid = linear_grid(1e7, 1.5e9, 20);
    let data = joint(&p, &grid, vec![]);
    assert!(residuals(&p, &data).unwrap().iter().all(|r| r.abs() < 1e-12));

    let masked = joint(&p, &grid, vec![FreqInterval::new(0.5e9, 0.6e9).unwrap()]);
    let n_in = grid.iter().filter(|f| (0.5e9..=0.6e9).contains(*f)).count();
    assert!(n_in > 0);
    assert_eq!(residuals(&p, &masked).unwrap().len(), 2 * (grid.len() - n_in));

    let f = 2e8;
    let v = db(crate::opo::variance_detected(f, &p, Quadrature::Squeezed).unwrap()) + 1.0;
    let pts = vec![
        DataPoint { frequency: f, value_db: v, quadrature: Quadrature::Squeezed },
        DataPoint { frequency: 3e8, value_db: 0.0, quadrature: Quadrature::Squeezed },
        DataPoint { frequency: 4e8, value_db: 0.0, quadrature: Quadrature::Squeezed },
    ];
    let single = FitDataset::from_points(pts, vec![]).unwrap();
    assert_abs_diff_eq!(residuals(&p, &single).unwrap()[0], 1.0, epsilon = 1e-12);
}

#[test]
fn residual_order_is_squeezed_then_antisqueezed() {
    let p = sys2();
    let grid = linear_grid(1e7, 1.5e9, 5);
    let data = joint(&p, &grid, vec![]);
    let qs: Vec<Quadrature> = data.active().map(|d| d.quadrature).collect();
    assert_eq!(&qs[..5], &[Quadrature::Squeezed; 5]);
    assert_eq!(&qs[5..], &[Quadrature::Antisqueezed; 5]);
    let fs: Vec<f64> = data.active().map(|d| d.frequency).collect();
    assert!(fs[..5].windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn dataset_invariants() {
    let p = sys2();
    let grid = linear_grid(1e7, 1.5e9, 10);
    let sq = model_spectrum(&p, &grid, Quadrature::Squeezed);
    let an = model_spectrum(&p, &grid, Quadrature::Antisqueezed);
    let wide = vec![FreqInterval::new(1e8, 2e9).unwrap()];
    assert!(matches!(FitDataset::new(&sq, &an, wide), Err(Error::InsufficientData(_))));
    assert!(FreqInterval::new(2.0, 1.0).is_err());
    assert!("1e8:2e8".parse::<FreqInterval>().is_ok());
    assert!("1e8-2e8".parse::<FreqInterval>().is_err());
    assert!("3e8:2e8".parse::<FreqInterval>().is_err());
}

#[test]
fn jacobian_examples() {
    let grid = linear_grid(0.0 + 1e6, 1.5e9, 50);
    let vacuum = OpoParams::new(1e9, 0.0, 1.0).unwrap();
    let data = joint(&vacuum, &grid, vec![]);
    let j = jacobian(&vacuum, &data, JacobianMode::Analytic).unwrap();
    assert!(j.column(2).iter().all(|v| *v == 0.0));
    let jf = jacobian(&vacuum, &data, JacobianMode::FiniteDifference).unwrap();
    assert!(jf.column(2).amax() < 1e-9);

    let p = sys2();
    let dc = vec![
        DataPoint { frequency: 0.0, value_db: -5.0, quadrature: Quadrature::Squeezed },
        DataPoint { frequency: 1e8, value_db: -5.0, quadrature: Quadrature::Squeezed },
        DataPoint { frequency: 2e8, value_db: -5.0, quadrature: Quadrature::Squeezed },
    ];
    let data = FitDataset::from_points(dc, vec![]).unwrap();
    let j = jacobian(&p, &data, JacobianMode::Analytic).unwrap();
    assert_eq!(j[(0, 0)], 0.0);
    assert!(j[(1, 0)] != 0.0);
}

#[test]
fn jacobian_matches_finite_differences() {
    let p = OpoParams::new(1.75e9, 0.5, 0.85).unwrap();
    let grid = linear_grid(1e7, 2e9, 100);
    let data = joint(&p, &grid, vec![]);
    let a = jacobian(&p, &data, JacobianMode::Analytic).unwrap();
    let f = jacobian(&p, &data, JacobianMode::FiniteDifference).unwrap();
    let dev = max_relative_deviation(&a, &f);
    assert!(dev < 1e-6, "deviation {dev}");
}

#[test]
fn noiseless_recovery_from_perturbed_inits() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 200);
    let data = joint(&truth, &grid, vec![]);
    for factor in [[1.2, 1.2, 0.8], [0.8, 0.8, 1.15], [1.2, 0.8, 1.1], [0.8, 1.2, 0.9]] {
        let init = perturbed(&truth, factor);
        let r = fit(&data, &init, &FitOptions::default()).unwrap();
        assert!(r.converged);
        for (got, want) in r.params.as_array().iter().zip(truth.as_array()) {
            assert!(((got - want) / want).abs() < 1e-6, "{factor:?}: {got} vs {want}");
        }
        assert!(r.rms_residual_db < 1e-8);
        assert!(r.sigma.as_array().iter().zip(truth.as_array()).all(|(s, v)| *s < 1e-6 * v));
    }
}

#[test]
fn initial_guess_lands_near_truth() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 300);
    let g = initial_guess(&joint(&truth, &grid, vec![])).unwrap();
    assert!((g.x - truth.x).abs() < 0.05, "{g:?}");
    assert!((g.eta - truth.eta).abs() < 0.05, "{g:?}");
    assert!((g.gamma_fwhm / truth.gamma_fwhm - 1.0).abs() < 0.3, "{g:?}");
    let r = fit(&joint(&truth, &grid, vec![]), &g, &FitOptions::default()).unwrap();
    assert!((r.params.gamma_fwhm / truth.gamma_fwhm - 1.0).abs() < 1e-6);
}

#[test]
fn cost_never_increases() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 300);
    let data = noisy_joint(&truth, &grid, 0.2, 11);
    let r = fit(&data, &perturbed(&truth, [1.3, 0.7, 0.9]), &FitOptions::default()).unwrap();
    assert!(r.cost_history.len() > 2);
    assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fit_is_invariant_under_point_reordering() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 150);
    let data = noisy_joint(&truth, &grid, 0.2, 3);
    let mut pts = data.points().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    use rand::seq::SliceRandom;
    pts.shuffle(&mut rng);
    let shuffled = FitDataset::from_points(pts, vec![]).unwrap();
    let init = perturbed(&truth, [1.1, 0.95, 1.05]);
    let a = fit(&data, &init, &FitOptions::default()).unwrap();
    let b = fit(&shuffled, &init, &FitOptions::default()).unwrap();
    for (x, y) in a.params.as_array().iter().zip(b.params.as_array()) {
        assert!(((x - y) / x).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn masking_equals_deleting_points() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 120);
    let data = noisy_joint(&truth, &grid, 0.2, 8);
    let mask = FreqInterval::new(0.8e9, 0.9e9).unwrap();
    let masked = FitDataset::from_points(data.points().to_vec(), vec![mask]).unwrap();
    let kept: Vec<DataPoint> = data.points().iter().copied().filter(|p| !mask.contains(p.frequency)).collect();
    let deleted = FitDataset::from_points(kept, vec![]).unwrap();
    let ra = residuals(&truth, &masked).unwrap();
    let rb = residuals(&truth, &deleted).unwrap();
    assert_eq!(ra.len(), rb.len());
    assert!(ra.iter().zip(&rb).all(|(a, b)| a.to_bits() == b.to_bits()));
    let init = perturbed(&truth, [1.1, 0.95, 1.05]);
    let fa = fit(&masked, &init, &FitOptions::default()).unwrap();
    let fb = fit(&deleted, &init, &FitOptions::default()).unwrap();
    assert_eq!(fa.params, fb.params);
}

#[test]
fn joint_fit_beats_squeezed_only() {
    // The squeezed branch alone is a two-parameter Lorentzian in f², so its
    // covariance is unbounded; adding the anti-squeezed branch makes all three
    // parameters finite.
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 300);
    let data = noisy_joint(&truth, &grid, 0.2, 21);
    let sq_points: Vec<DataPoint> =
        data.points().iter().copied().filter(|p| p.quadrature == Quadrature::Squeezed).collect();
    let sq_only = FitDataset::from_points(sq_points, vec![]).unwrap();
    let init = perturbed(&truth, [1.05, 0.98, 1.02]);
    let j = fit(&data, &init, &FitOptions::default()).unwrap();
    assert!(j.covariance.iter().enumerate().all(|(k, row)| row[k].is_finite() && row[k] > 0.0));
    assert!(j.condition_number < CONDITION_WARN);
    match fit(&sq_only, &init, &FitOptions::default()) {
        Err(Error::Degenerate { condition, .. }) => assert!(condition > CONDITION_SINGULAR),
        other => panic!("expected a degenerate squeezed-only fit, got {other:?}"),
    }
}

#[test]
fn squeezed_only_near_threshold_warns() {
    let truth = OpoParams::new(1.75e9, 0.999, 0.858).unwrap();
    let grid = linear_grid(1e6, 5e7, 100);
    let sq = model_spectrum(&truth, &grid, Quadrature::Squeezed);
    let data = FitDataset::squeezed_only(&sq, vec![]).unwrap();
    let jn = jacobian(&truth, &data, JacobianMode::Analytic).unwrap();
    let (cond, _) = conditioning(&jn);
    assert!(cond > CONDITION_WARN, "condition {cond:e}");
    match fit(&data, &truth, &FitOptions::default()) {
        Err(Error::Degenerate { direction, .. }) => assert!(direction.contains("eta"), "{direction}"),
        other => panic!("expected degeneracy, got {other:?}"),
    }
}

#[test]
fn flat_data_is_degenerate() {
    // with x pinned at zero the data carry no linewidth information
    let vacuum = OpoParams::new(1e9, 1e-12, 0.9).unwrap();
    let grid = linear_grid(1e7, 1.5e9, 50);
    let data = joint(&vacuum, &grid, vec![]);
    let jn = jacobian(&vacuum, &data, JacobianMode::Analytic).unwrap();
    assert!(conditioning(&jn).0 > CONDITION_WARN);
}

#[test]
fn covariance_is_symmetric_psd() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 200);
    let r = fit(&noisy_joint(&truth, &grid, 0.2, 4), &truth, &FitOptions::default()).unwrap();
    let c = Matrix3::from_fn(|i, k| r.covariance[i][k]);
    assert_eq!(c, c.transpose());
    assert!(c.symmetric_eigen().eigenvalues.iter().all(|l| *l >= -1e-30));
    for k in 0..3 {
        assert_eq!(r.sigma.as_array()[k], c[(k, k)].sqrt());
    }
}

#[test]
fn sandwich_covariance_tracks_pooled_on_uniform_noise() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 400);
    let data = noisy_joint(&truth, &grid, 0.2, 9);
    let pooled = fit(&data, &truth, &FitOptions::default()).unwrap();
    let opts = FitOptions { covariance: CovarianceMode::Sandwich, ..FitOptions::default() };
    let robust = fit(&data, &truth, &opts).unwrap();
    assert_eq!(pooled.params, robust.params);
    let c = Matrix3::from_fn(|i, k| robust.covariance[i][k]);
    assert_eq!(c, c.transpose());
    assert!(c.symmetric_eigen().eigenvalues.iter().all(|l| *l >= -1e-30));
    for (a, b) in pooled.sigma.as_array().iter().zip(robust.sigma.as_array()) {
        assert!((b / a - 1.0).abs() < 0.25, "pooled {a} vs sandwich {b}");
    }
    assert_eq!("sandwich".parse::<CovarianceMode>().unwrap(), CovarianceMode::Sandwich);
    assert_eq!("residual".parse::<CovarianceMode>().unwrap(), CovarianceMode::Residual);
    assert!("hc3".parse::<CovarianceMode>().is_err());
}

#[test]
fn unconverged_fit_is_flagged() {
    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 200);
    let data = noisy_joint(&truth, &grid, 0.2, 2);
    let opts = FitOptions { max_iterations: 1, multistart: 2, ..FitOptions::default() };
    let r = fit(&data, &perturbed(&truth, [1.2, 0.8, 0.8]), &opts).unwrap();
    assert!(!r.converged);
    assert!(fit_report(&r).contains("DID NOT CONVERGE"));
}

#[test]
fn report_examples() {
    let r = FitResult {
        params: OpoParams::new(1.75e9, 0.8116, 0.858).unwrap(),
        sigma: ParamSigma { gamma_fwhm: 0.013e9, x: 0.004, eta: 0.011 },
        covariance: [[0.0; 3]; 3],
        rms_residual_db: 0.2,
        n_points: 1000,
        converged: true,
        iterations: 7,
        cost: 20.0,
        condition_number: 1e3,
        warnings: vec![],
        mask: vec![FreqInterval::new(0.8e9, 0.9e9).unwrap()],
        cost_history: vec![],
        start_index: 0,
    };
    let text = fit_report(&r);
    assert!(text.contains("gamma_fwhm = 1.750 ± 0.013 GHz"), "{text}");
    assert!(text.contains("eta = 85.8 ± 1.1 %"), "{text}");
    assert!(text.contains("0.8000 - 0.9000 GHz"));
    assert!(!text.contains("NOT CONVERGE"));

    let truth = sys2();
    let grid = linear_grid(1e7, 1.5e9, 100);
    let noiseless = fit(&joint(&truth, &grid, vec![]), &truth, &FitOptions::default()).unwrap();
    assert!(fit_report(&noiseless).contains("<1e-6"));
}

