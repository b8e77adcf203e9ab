use super::*;
use crate::fit::{FitOptions, FitWindow};
use crate::physics::{
    damped_state, sideband_ratio, thermal_occupation, Couplings, Environment, ModeLabel,
};
use crate::spectrum::{
    calibration_tone_pair, noiseless_periodogram, synthesize_periodogram, HetResponse,
    SpectrumModel, ToneSpec, WindowId,
};
use proptest::prelude::*;

const C: PhysConsts = PhysConsts::CODATA;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn noiseless_pair(model: &SpectrumModel, span: f64, rbw: f64) -> (Periodogram, Periodogram) {
    (
        noiseless_periodogram(model, WindowId::Stokes, span, rbw).unwrap(),
        noiseless_periodogram(model, WindowId::AntiStokes, span, rbw).unwrap(),
    )
}

fn window_around(center: f64, half: f64) -> FitWindow {
    FitWindow::new(center - half, center + half).unwrap()
}

#[test]
fn joint_fit_recovers_noiseless_ratio() {
    let mut m = SpectrumModel::bare(1.509e6, 2000.0, 2.1);
    m.white_background = 1e-5;
    let (s, a) = noiseless_pair(&m, 40e3, 100.0);
    let fit = fit_sideband_pair(
        &s,
        &a,
        &window_around(1.509e6, 19e3),
        &FitOptions::default(),
    )
    .unwrap();
    assert!(rel(fit.center_hz, 1.509e6) < 1e-12);
    assert!(rel(fit.gamma_hz, 2000.0) < 1e-8);
    let r = ratio_from_peak_fits(&fit, &HeterodyneCalibration::IDENTITY);
    assert!(
        rel(r.value, sideband_ratio(2.1).unwrap()) < 1e-8,
        "{}",
        r.value
    );
}

#[test]
fn mirrored_data_gives_unit_ratio() {
    let mut m = SpectrumModel::bare(2e6, 1500.0, 4.0);
    m.white_background = 1e-4;
    let a = noiseless_periodogram(&m, WindowId::AntiStokes, 30e3, 100.0).unwrap();
    let s = a.mirrored(WindowId::Stokes);
    let fit = fit_sideband_pair(&s, &a, &window_around(2e6, 14e3), &FitOptions::default()).unwrap();
    let r = ratio_from_peak_fits(&fit, &HeterodyneCalibration::IDENTITY);
    assert_eq!(r.value, 1.0);
}

#[test]
fn band_ratio_of_noiseless_model() {
    let m = SpectrumModel::bare(1.509e6, 1000.0, 2.1);
    let (s, a) = noiseless_pair(&m, 20e3, 50.0);
    let zero = BackgroundEstimate::exact(0.0);
    let r = ratio_from_bands(
        &s,
        &a,
        1.509e6,
        2000.0,
        (&zero, &zero),
        &HeterodyneCalibration::IDENTITY,
    )
    .unwrap();
    assert!((r.value - 1.476).abs() < 1e-3);
}

#[test]
fn flat_response_calibrates_to_one() {
    let mut m = SpectrumModel::bare(2e6, 1e3, 10.0);
    m.white_background = 1e-3;
    let tone = ToneSpec {
        freq_hz: 2.02e6,
        power: 1.0,
        span_hz: 2e3,
        rbw_hz: 100.0,
        n_avg: 1000,
    };
    let (s, a) = calibration_tone_pair(&m, &tone, 11).unwrap();
    let cal = heterodyne_calibration(&s, &a).unwrap();
    assert!((cal.rho - 1.0).abs() < 4.0 * cal.sigma, "{cal:?}");
    assert!(cal.sigma > 0.0);

    m.het_response = HetResponse::tilted(0.02, 2e6);
    let (s, a) = calibration_tone_pair(&m, &tone, 12).unwrap();
    let cal = heterodyne_calibration(&s, &a).unwrap();
    let expected = m.het_response.eval(-2.02e6) / m.het_response.eval(2.02e6);
    assert!(
        (cal.rho - expected).abs() < 4.0 * cal.sigma,
        "{cal:?} vs {expected}"
    );
}

#[test]
fn plain_noise_has_no_tone() {
    let mut m = SpectrumModel::bare(2e6, 1e3, 10.0);
    m.white_background = 1.0;
    for seed in 0..20 {
        let s = synthesize_periodogram(&m, WindowId::Stokes, 2e3, 100.0, 100, seed).unwrap();
        assert_eq!(heterodyne_calibration(&s, &s), Err(Error::MissingTone));
    }
}

#[test]
fn occupation_propagation() {
    let r = RatioEstimate {
        value: 1.476,
        sigma_fit: 0.03,
        sigma_calibration: 0.0,
        method: Method::PeakRatio,
    };
    let t = occupation_and_teff(&r, 1.509e6, 0.0, &C).unwrap();
    assert!((t.n_bar.unwrap() - 2.1).abs() < 0.01);
    assert!((t.n_bar_sigma.unwrap() - 0.13).abs() < 0.005);
    assert_eq!(t.systematics.len(), 4);
    assert!(!t.unbounded_consistent);
    // Check dT/dn against a finite difference.
    let n = t.n_bar.unwrap();
    let h = 1e-6;
    let fd = (temperature_from_occupation(n + h, 1.509e6, &C).unwrap()
        - temperature_from_occupation(n - h, 1.509e6, &C).unwrap())
        / (2.0 * h);
    assert!(rel(t.t_eff_sigma.unwrap(), fd * t.n_bar_sigma.unwrap()) < 1e-6);
}

#[test]
fn ratio_near_one_is_unbounded() {
    let near = RatioEstimate {
        value: 1.0005,
        sigma_fit: 0.001,
        sigma_calibration: 0.0,
        method: Method::BandRatio,
    };
    let t = occupation_and_teff(&near, 1e6, 0.0, &C).unwrap();
    assert!(t.unbounded_consistent);
    let below = RatioEstimate {
        value: 0.999,
        ..near
    };
    let t = occupation_and_teff(&below, 1e6, 0.0, &C).unwrap();
    assert_eq!(t.n_bar, None);
    assert_eq!(t.t_eff_kelvin, None);
    assert!(t.stat_sigma > 0.0);
    assert_eq!(t.systematics.len(), 4);
}

#[test]
fn classical_bound_maps_to_quanta() {
    let r = RatioEstimate {
        value: 1.5,
        sigma_fit: 0.01,
        sigma_calibration: 0.0,
        method: Method::PeakRatio,
    };
    let t = occupation_and_teff(&r, 1e6, 0.01, &C).unwrap();
    let v = t.systematic(SystematicKind::ClassicalNoiseBound).value;
    let worst = 1.0 / (1.5 * 0.99 / 1.01 - 1.0) - 2.0;
    assert!(rel(v, worst) < 0.05, "{v} vs {worst}");
}

#[test]
fn linear_fit_exact_line() {
    let x = [0.0, 1.0, 2.0, 5.0];
    let y: Vec<f64> = x.iter().map(|x| 2.0 * x + 1.0).collect();
    let f = weighted_linear_fit(&x, &y, &[0.1, 0.2, 0.1, 0.3]).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-14);
    assert!((f.intercept - 1.0).abs() < 1e-14);
    assert!(f
        .scaled_covariance()
        .iter()
        .flatten()
        .all(|v| v.abs() < 1e-25));
    assert_eq!(
        weighted_linear_fit(&[1.0, 1.0], &[0.0, 1.0], &[1.0, 1.0]),
        Err(Error::DegenerateAbscissa)
    );
}

#[test]
fn equal_weights_match_ordinary_least_squares() {
    let x = [1.0, 2.0, 3.0, 4.0, 7.0];
    let y = [1.1, 1.9, 3.2, 3.9, 7.3];
    let f = weighted_linear_fit(&x, &y, &[0.5; 5]).unwrap();
    let n = 5.0;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    assert!((f.slope - slope).abs() < 1e-12);
    assert!((f.intercept - intercept).abs() < 1e-12);
}

fn reference_mode(gamma0: f64) -> MechMode {
    MechMode::new(ModeLabel(3, 2), 2.637e6, gamma0, 18.0).unwrap()
}

fn exact_sweep(t0: f64, gamma0: f64, backaction: bool, p_probe: f64) -> (Vec<RatioPoint>, f64) {
    let mode = reference_mode(gamma0);
    let cavity = CavityParams::new(2.7e6, 1.55e-6, 0.08).unwrap();
    let couplings = Couplings {
        damping: BeamCoupling::resonant(&cavity, &C),
        probe: BeamCoupling::resonant(&cavity, &C),
        backaction,
    };
    let env = Environment::new(t0).unwrap();
    let points = [3e-6, 8e-6, 14e-6, 20e-6, 28e-6]
        .iter()
        .map(|&p| {
            let s = damped_state(&mode, &cavity, &env, p, p_probe, &couplings, &C).unwrap();
            RatioPoint {
                p_damp_watts: p,
                r_sa: sideband_ratio(s.n_bar).unwrap(),
                r_sigma: 1e-3,
                gamma_m_hz: s.gamma_m_hz,
                gamma_sigma: 1.0,
            }
        })
        .collect();
    (points, thermal_occupation(mode.freq_hz, t0, &C).unwrap())
}

#[test]
fn extrapolation_is_exact_without_backaction() {
    for (t0, g0) in [(4.8, 0.84), (10.0, 0.866), (50.0, 1.07)] {
        let (pts, n_th) = exact_sweep(t0, g0, false, 26e-6);
        let e =
            extrapolate_t0(&pts, g0, 2.637e6, &HeterodyneCalibration::IDENTITY, 0.0, &C).unwrap();
        assert!(rel(e.n_th_raw, n_th) < 1e-9, "{} vs {n_th}", e.n_th_raw);
        assert!(rel(e.n_th_direct.unwrap(), n_th) < 1e-9);
        assert!(rel(e.result.t0_kelvin.unwrap(), t0) < 1e-9);
        assert!(
            e.result
                .systematic(SystematicKind::HeterodyneResidual)
                .value
                .abs()
                < 1e-9
        );
    }
}

#[test]
fn backaction_offset_is_removed_exactly() {
    let g0 = 0.84;
    let (pts, n_th) = exact_sweep(4.8, g0, true, 26e-6);
    let e = extrapolate_t0(&pts, g0, 2.637e6, &HeterodyneCalibration::IDENTITY, 0.0, &C).unwrap();
    assert!(e.n_th_raw > n_th);
    let cavity = CavityParams::new(2.7e6, 1.55e-6, 0.08).unwrap();
    let probe = BeamCoupling::resonant(&cavity, &C);
    let corr =
        backaction_correction(e.n_th_raw, 26e-6, &reference_mode(g0), &cavity, &probe, &C).unwrap();
    assert!(rel(corr.n_th_corrected, n_th) < 1e-9);
    let mut result = e.result.clone();
    result.apply_backaction(&corr);
    assert!(rel(result.t0_kelvin.unwrap(), 4.8) < 1e-9);
    assert_eq!(
        result
            .systematic(SystematicKind::BackactionCorrection)
            .value,
        corr.kelvin
    );

    let zero = backaction_correction(n_th, 0.0, &reference_mode(g0), &cavity, &probe, &C).unwrap();
    assert_eq!(zero.kelvin, 0.0);
    let half =
        backaction_correction(n_th, 13e-6, &reference_mode(g0), &cavity, &probe, &C).unwrap();
    let full =
        backaction_correction(n_th, 26e-6, &reference_mode(g0), &cavity, &probe, &C).unwrap();
    assert!(rel(full.quanta, 2.0 * half.quanta) < 1e-12);
    assert!(rel(full.kelvin, 2.0 * half.kelvin) < 1e-3);
}

#[test]
fn extrapolation_guards() {
    let (pts, _) = exact_sweep(4.8, 0.84, false, 0.0);
    let cal = HeterodyneCalibration::IDENTITY;
    assert!(matches!(
        extrapolate_t0(&pts[..2], 0.84, 2.637e6, &cal, 0.0, &C),
        Err(Error::InsufficientSpan { points: 2, .. })
    ));
    // 8, 14, 20 µW span only 2.5x.
    assert!(matches!(
        extrapolate_t0(&pts[1..4], 0.84, 2.637e6, &cal, 0.0, &C),
        Err(Error::InsufficientSpan { points: 3, .. })
    ));
    let flipped: Vec<RatioPoint> = pts
        .iter()
        .map(|p| RatioPoint {
            r_sa: 2.0 - p.r_sa,
            ..*p
        })
        .collect();
    assert_eq!(
        extrapolate_t0(&flipped, 0.84, 2.637e6, &cal, 0.0, &C).unwrap_err(),
        Error::NegativeSlope("sideband ratio")
    );
}

proptest! {
    #[test]
    fn collinear_data_is_fitted_exactly(
        slope in -1e3f64..1e3,
        intercept in -1e3f64..1e3,
        xs in proptest::collection::vec(-100.0f64..100.0, 3..12),
        s in 0.01f64..10.0,
    ) {
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1.0);
        let y: Vec<f64> = xs.iter().map(|x| slope * x + intercept).collect();
        let sig: Vec<f64> = xs.iter().enumerate().map(|(i, _)| s * (1.0 + i as f64)).collect();
        let f = weighted_linear_fit(&xs, &y, &sig).unwrap();
        let tol = 1e-9 * (slope.abs() * 100.0 + intercept.abs() + 1.0);
        prop_assert!((f.slope - slope).abs() * 100.0 <= tol);
        prop_assert!((f.intercept - intercept).abs() <= tol);
    }

    #[test]
    fn calibration_divides_ratio(rho in 0.9f64..1.1, raw in 1.01f64..3.0) {
        let cal = HeterodyneCalibration { rho, sigma: 0.0 };
        let r = calibrated_ratio(raw, 0.0, 1.0, 0.0, 0.0, &cal, Method::BandRatio);
        prop_assert!(rel(r.value * rho, raw) < 1e-14);
    }
}
