use raman_core::fit::lorentzian_band_area;
use raman_core::spectrum::{SpectrumModel, SubstrateLine};

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, a, m, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, right, 0.5 * tol, depth - 1)
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive(&f, a, b, simpson(&f, a, b), tol, 50)
}

#[test]
fn band_area_matches_quadrature() {
    for &(amp, center, gamma, lo, hi) in &[
        (2.0, 0.0, 500.0, -2000.0, 2000.0),
        (0.3, 5.0e6, 40.0, 5.0e6 - 100.0, 5.0e6 + 700.0),
        (7.5, -3.0e6, 2000.0, -3.02e6, -2.99e6),
    ] {
        let exact = lorentzian_band_area(amp, center, gamma, lo, hi);
        let h = 0.5 * gamma;
        let numeric = integrate(
            |f| amp / (1.0 + ((f - center) / h).powi(2)),
            lo,
            hi,
            1e-12 * exact,
        );
        assert!((numeric / exact - 1.0).abs() < 1e-6, "{numeric} vs {exact}");
    }
}

#[test]
fn wide_band_area_approaches_the_full_lorentzian() {
    let (amp, gamma, hw) = (1.0, 300.0, 2000.0);
    let area = lorentzian_band_area(amp, 0.0, gamma, -hw, hw);
    let full = std::f64::consts::PI * amp * gamma / 2.0;
    let kept = 1.0 - (2.0 / std::f64::consts::PI) * (gamma / (2.0 * hw)).atan();
    assert!((area / full - kept).abs() < 1e-12);
}

#[test]
fn ideal_spectrum_integrates_to_occupation() {
    let mut model = SpectrumModel::bare(5.0e6, 400.0, 2.5);
    let f0 = model.primary.freq_hz;
    let (lo, hi) = (f0 - 200_000.0, f0 + 200_000.0);
    let anti = integrate(|f| model.ideal_psd(f), lo, hi, 1e-10);
    let stokes = integrate(|f| model.ideal_psd(f), -hi, -lo, 1e-10);
    let kept = (2.0 / std::f64::consts::PI) * (200_000.0f64 / 200.0).atan();
    assert!((anti / (2.5 * kept) - 1.0).abs() < 1e-6, "{anti}");
    assert!((stokes / (3.5 * kept) - 1.0).abs() < 1e-6, "{stokes}");

    model.substrate_lines.push(SubstrateLine {
        freq_hz: f0 + 30_000.0,
        gamma_hz: 3_000.0,
        area_quanta: 0.8,
    });
    let line = integrate(|f| model.substrate_quanta(f), f0 - 1e6, f0 + 1e6, 1e-10);
    assert!((line / 0.8 - 1.0).abs() < 0.01, "{line}");
    let mirror = integrate(|f| model.substrate_quanta(f), -f0 - 1e6, -f0 + 1e6, 1e-10);
    assert!((mirror - line).abs() < 1e-9);
}
