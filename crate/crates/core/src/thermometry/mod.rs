//! Sideband-ratio thermometry.
//!
//! A ratio `R = S_stokes / S_antistokes` of a thermal mode gives its
//! occupation `n = 1/(R - 1)` with no other input. The functions here turn
//! fits or band integrals into calibrated ratios, ratios into occupations and
//! effective temperatures, and a damping sweep into the physical bath
//! temperature via
//!
//! `n_th = (dΓm/dP) / (dR/dP) / Γ0`.

mod joint;

use alloc::vec::Vec;

// Shadowed by the inherent methods whenever std is in the build graph.
#[allow(unused_imports)]
use num_traits::Float;

pub use joint::{fit_sideband_pair, index, SidebandFit, PAIR_PARAMS};

use crate::fit::{integrate_band, BackgroundEstimate};
use crate::physics::{
    backaction_occupation, temperature_from_occupation, BeamCoupling, CavityParams, MechMode,
    PhysConsts,
};
use crate::spectrum::Periodogram;
use crate::{Error, Result};

/// Tones weaker than this many single-bin noise deviations are not found.
const TONE_DETECTION_SIGMAS: f64 = 5.0;
const MIN_EXTRAPOLATION_POINTS: usize = 3;
const MIN_EXTRAPOLATION_SPAN: f64 = 3.0;

/// Detected Stokes-side / anti-Stokes-side response `ρ = h(-ν)/h(+ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeterodyneCalibration {
    pub rho: f64,
    pub sigma: f64,
}

impl HeterodyneCalibration {
    pub const IDENTITY: HeterodyneCalibration = HeterodyneCalibration {
        rho: 1.0,
        sigma: 0.0,
    };

    pub fn relative_sigma(&self) -> f64 {
        self.sigma / self.rho
    }
}

struct TonePower {
    power: f64,
    sigma: f64,
}

fn tone_power(pg: &Periodogram) -> Result<TonePower> {
    if pg.len() < 3 {
        return Err(Error::MissingTone);
    }
    let mut peak = 0;
    for (i, v) in pg.values.iter().enumerate() {
        if *v > pg.values[peak] {
            peak = i;
        }
    }
    let others = (pg.len() - 1) as f64;
    let noise = pg
        .values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != peak)
        .map(|(_, v)| v)
        .sum::<f64>()
        / others;
    let n_avg = pg.n_avg as f64;
    let excess = pg.values[peak] - noise;
    if !(excess > TONE_DETECTION_SIGMAS * noise / n_avg.sqrt()) {
        return Err(Error::MissingTone);
    }
    // An averaged bin holding a tone of density T over noise density N has
    // variance (2TN + N²)/n_avg; the background mean adds N²/(n_avg·bins).
    let var_bin = (2.0 * excess * noise + noise * noise) / n_avg;
    let var_bg = noise * noise / (n_avg * others);
    Ok(TonePower {
        power: excess * pg.rbw_hz,
        sigma: (var_bin + var_bg).sqrt() * pg.rbw_hz,
    })
}

/// Response ratio from a tone pair placed symmetrically about the carrier.
/// Raw sideband ratios are divided by `rho`.
pub fn heterodyne_calibration(
    stokes_side: &Periodogram,
    antistokes_side: &Periodogram,
) -> Result<HeterodyneCalibration> {
    let s = tone_power(stokes_side)?;
    let a = tone_power(antistokes_side)?;
    let rho = s.power / a.power;
    let rel = ((s.sigma / s.power).powi(2) + (a.sigma / a.power).powi(2)).sqrt();
    Ok(HeterodyneCalibration {
        rho,
        sigma: rho * rel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    PeakRatio,
    BandRatio,
    Extrapolation,
}

/// Calibrated Stokes/anti-Stokes ratio. The statistical error of the spectra
/// and the error of the response calibration are kept apart because the
/// latter is common to every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioEstimate {
    pub value: f64,
    pub sigma_fit: f64,
    pub sigma_calibration: f64,
    pub method: Method,
}

impl RatioEstimate {
    pub fn sigma(&self) -> f64 {
        self.sigma_fit.hypot(self.sigma_calibration)
    }
}

fn calibrated_ratio(
    num: f64,
    num_var: f64,
    den: f64,
    den_var: f64,
    covar: f64,
    cal: &HeterodyneCalibration,
    method: Method,
) -> RatioEstimate {
    let raw = num / den;
    let value = raw / cal.rho;
    let rel_var = num_var / (num * num) + den_var / (den * den) - 2.0 * covar / (num * den);
    RatioEstimate {
        value,
        sigma_fit: value.abs() * rel_var.max(0.0).sqrt(),
        sigma_calibration: value.abs() * cal.relative_sigma(),
        method,
    }
}

/// `R = (A_s / A_as) / ρ` from the peak heights of a joint sideband fit,
/// including the covariance between the two heights.
pub fn ratio_from_peak_fits(fit: &SidebandFit, cal: &HeterodyneCalibration) -> RatioEstimate {
    let c = &fit.covariance;
    calibrated_ratio(
        fit.stokes_amplitude,
        c[index::STOKES_AMPLITUDE][index::STOKES_AMPLITUDE],
        fit.antistokes_amplitude,
        c[index::ANTI_STOKES_AMPLITUDE][index::ANTI_STOKES_AMPLITUDE],
        c[index::STOKES_AMPLITUDE][index::ANTI_STOKES_AMPLITUDE],
        cal,
        Method::PeakRatio,
    )
}

/// Background estimates taken from a joint fit, one per sideband.
pub fn fit_backgrounds(fit: &SidebandFit) -> (BackgroundEstimate, BackgroundEstimate) {
    let bg = |i: usize, level: f64| BackgroundEstimate {
        level,
        sigma: fit.sigma(i),
        contaminated: false,
    };
    (
        bg(index::STOKES_BACKGROUND, fit.stokes_background),
        bg(index::ANTI_STOKES_BACKGROUND, fit.antistokes_background),
    )
}

/// Ratio of the background-subtracted areas in `center_hz ± half_width_hz`
/// (anti-Stokes side) and its mirror image (Stokes side).
pub fn ratio_from_bands(
    stokes: &Periodogram,
    antistokes: &Periodogram,
    center_hz: f64,
    half_width_hz: f64,
    backgrounds: (&BackgroundEstimate, &BackgroundEstimate),
    cal: &HeterodyneCalibration,
) -> Result<RatioEstimate> {
    let s = integrate_band(stokes, -center_hz, half_width_hz, backgrounds.0)?;
    let a = integrate_band(antistokes, center_hz, half_width_hz, backgrounds.1)?;
    Ok(calibrated_ratio(
        s.area,
        s.sigma * s.sigma,
        a.area,
        a.sigma * a.sigma,
        0.0,
        cal,
        Method::BandRatio,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Unit {
    Kelvin,
    Quanta,
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SystematicKind {
    /// Ratio methods: calibration error mapped to quanta. Extrapolation:
    /// offset of the fitted ratio intercept from the undamped ratio
    /// `1 + 1/n_th`.
    HeterodyneResidual,
    /// Shift already applied to the headline value for probe backaction.
    BackactionCorrection,
    /// Spread of the band-ratio temperature under shifts of the band centre.
    SubstrateBandSensitivity,
    /// Bias allowed by the bound on classical sideband noise.
    ClassicalNoiseBound,
}

impl SystematicKind {
    pub const ALL: [SystematicKind; 4] = [
        SystematicKind::HeterodyneResidual,
        SystematicKind::BackactionCorrection,
        SystematicKind::SubstrateBandSensitivity,
        SystematicKind::ClassicalNoiseBound,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Systematic {
    pub kind: SystematicKind,
    pub value: f64,
    pub unit: Unit,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThermometryResult {
    pub method: Method,
    pub ratio: Option<RatioEstimate>,
    /// `None` when the ratio does not exceed one: the occupation is
    /// unbounded above.
    pub n_bar: Option<f64>,
    pub n_bar_sigma: Option<f64>,
    /// The ratio lies within one standard deviation of one, so any large
    /// occupation is consistent with it.
    pub unbounded_consistent: bool,
    pub t_eff_kelvin: Option<f64>,
    pub t_eff_sigma: Option<f64>,
    pub t0_kelvin: Option<f64>,
    /// Standard deviation of the headline value: `n_bar` for ratio methods
    /// (the ratio itself when `n_bar` is unbounded), `t0_kelvin` for the
    /// extrapolation.
    pub stat_sigma: f64,
    /// One entry per [`SystematicKind`], in [`SystematicKind::ALL`] order.
    pub systematics: Vec<Systematic>,
}

impl ThermometryResult {
    fn empty_systematics(unit: Unit) -> Vec<Systematic> {
        SystematicKind::ALL
            .iter()
            .map(|&kind| Systematic {
                kind,
                value: 0.0,
                unit,
            })
            .collect()
    }

    pub fn systematic(&self, kind: SystematicKind) -> &Systematic {
        self.systematics
            .iter()
            .find(|s| s.kind == kind)
            .expect("every kind is present")
    }

    pub fn set_systematic(&mut self, kind: SystematicKind, value: f64, unit: Unit) {
        if let Some(s) = self.systematics.iter_mut().find(|s| s.kind == kind) {
            s.value = value;
            s.unit = unit;
        }
    }

    /// Subtract the backaction contribution from an extrapolated temperature
    /// and record it.
    pub fn apply_backaction(&mut self, correction: &BackactionCorrection) {
        if self.method != Method::Extrapolation {
            return;
        }
        self.t0_kelvin = Some(correction.t0_corrected);
        self.n_bar = Some(correction.n_th_corrected);
        self.set_systematic(
            SystematicKind::BackactionCorrection,
            correction.kelvin,
            Unit::Kelvin,
        );
    }
}

/// `dT/dn` of the Bose-Einstein inverse at occupation `n`.
fn temperature_slope(n: f64, freq_hz: f64, consts: &PhysConsts) -> f64 {
    let q = consts.quantum_kelvin(freq_hz);
    let l = (1.0 / n).ln_1p();
    q / (l * l * n * (n + 1.0))
}

/// `n = 1/(R - 1)`, `σn = σR/(R - 1)²`, and the matching effective
/// temperature. `classical_bound` is the largest fractional sideband bias
/// that classical laser noise may add to either sideband.
pub fn occupation_and_teff(
    ratio: &RatioEstimate,
    freq_hz: f64,
    classical_bound: f64,
    consts: &PhysConsts,
) -> Result<ThermometryResult> {
    if !(freq_hz > 0.0) {
        return Err(Error::domain("freq_hz", "positive", freq_hz));
    }
    let r = ratio.value;
    let sr = ratio.sigma();
    let excess = r - 1.0;
    let mut out = ThermometryResult {
        method: ratio.method,
        ratio: Some(*ratio),
        n_bar: None,
        n_bar_sigma: None,
        unbounded_consistent: excess <= sr,
        t_eff_kelvin: None,
        t_eff_sigma: None,
        t0_kelvin: None,
        stat_sigma: sr,
        systematics: ThermometryResult::empty_systematics(Unit::Quanta),
    };
    if !(excess > 0.0) || !r.is_finite() {
        return Ok(out);
    }
    let n = 1.0 / excess;
    let sn = sr / (excess * excess);
    let t = temperature_from_occupation(n, freq_hz, consts)?;
    out.n_bar = Some(n);
    out.n_bar_sigma = Some(sn);
    out.t_eff_kelvin = Some(t);
    out.t_eff_sigma = Some(sn * temperature_slope(n, freq_hz, consts));
    out.stat_sigma = sn;
    out.set_systematic(
        SystematicKind::HeterodyneResidual,
        ratio.sigma_calibration / (excess * excess),
        Unit::Quanta,
    );
    // Biases (1 ± β) on each sideband move R by up to a factor (1+β)/(1-β).
    let beta = classical_bound.abs();
    let dr = r * 2.0 * beta / (1.0 - beta);
    out.set_systematic(
        SystematicKind::ClassicalNoiseBound,
        dr / (excess * excess),
        Unit::Quanta,
    );
    Ok(out)
}

/// One point of a damping sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioPoint {
    pub p_damp_watts: f64,
    pub r_sa: f64,
    /// Statistical error only; calibration error is handled once per sweep.
    pub r_sigma: f64,
    pub gamma_m_hz: f64,
    pub gamma_sigma: f64,
}

impl RatioPoint {
    pub fn from_fit(p_damp_watts: f64, fit: &SidebandFit, cal: &HeterodyneCalibration) -> Self {
        let r = ratio_from_peak_fits(fit, cal);
        RatioPoint {
            p_damp_watts,
            r_sa: r.value,
            r_sigma: r.sigma_fit,
            gamma_m_hz: fit.gamma_hz,
            gamma_sigma: fit.sigma(index::GAMMA),
        }
    }
}

/// Straight line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Covariance of `(slope, intercept)` implied by the given `σ_y`.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn slope_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn intercept_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    /// Covariance rescaled by the reduced chi², for when the `σ_y` are only
    /// relative weights. Zero on exactly collinear data.
    pub fn scaled_covariance(&self) -> [[f64; 2]; 2] {
        let dof = self.points.saturating_sub(2);
        let f = if dof == 0 {
            0.0
        } else {
            self.chi2 / dof as f64
        };
        let c = self.covariance;
        [[c[0][0] * f, c[0][1] * f], [c[1][0] * f, c[1][1] * f]]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Closed-form weighted least-squares line.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma_y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() != sigma_y.len() {
        return Err(Error::Config(
            "x, y and sigma must have equal lengths".into(),
        ));
    }
    if x.len() < 2 {
        return Err(Error::Config("a line needs at least two points".into()));
    }
    if let Some(&s) = sigma_y.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::domain("sigma_y", "positive and finite", s));
    }
    let w: Vec<f64> = sigma_y.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm) * (x - xm)).sum();
    if !(sxx > 0.0) || x.iter().all(|v| *v == x[0]) {
        return Err(Error::DegenerateAbscissa);
    }
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| w * (x - xm) * (y - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let var_slope = 1.0 / sxx;
    let cov = -xm * var_slope;
    let var_intercept = 1.0 / sw + xm * xm * var_slope;
    let chi2 = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| w * (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        covariance: [[var_slope, cov], [cov, var_intercept]],
        chi2,
        points: x.len(),
    })
}

/// Everything produced by a damping-sweep extrapolation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Extrapolation {
    /// `R_sa` against damping power.
    pub ratio_fit: LinearFit,
    /// `Γm` against damping power.
    pub linewidth_fit: LinearFit,
    /// Undamped occupation before any backaction correction.
    pub n_th_raw: f64,
    pub n_th_sigma: f64,
    /// Cross-check from a direct fit of `R_sa` against `Γm`.
    pub n_th_direct: Option<f64>,
    pub t0_raw_kelvin: f64,
    pub result: ThermometryResult,
}

/// Bath occupation and temperature from a damping sweep,
/// `n_th = s_Γ / (s_R Γ0)`. The ratio intercept floats; its offset from the
/// undamped ratio is reported as the heterodyne residual. The calibration error enters once
/// as a common scale on every ratio.
pub fn extrapolate_t0(
    points: &[RatioPoint],
    gamma0_hz: f64,
    freq_hz: f64,
    cal: &HeterodyneCalibration,
    classical_bound: f64,
    consts: &PhysConsts,
) -> Result<Extrapolation> {
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.p_damp_watts), hi.max(p.p_damp_watts))
        });
    let span = if lo > 0.0 {
        hi / lo
    } else if hi > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if points.len() < MIN_EXTRAPOLATION_POINTS || !(span >= MIN_EXTRAPOLATION_SPAN) {
        return Err(Error::InsufficientSpan {
            points: points.len(),
            span: if span.is_finite() { span } else { 0.0 },
        });
    }
    if !(gamma0_hz > 0.0) {
        return Err(Error::domain("gamma0_hz", "positive", gamma0_hz));
    }
    let x: Vec<f64> = points.iter().map(|p| p.p_damp_watts).collect();
    let r: Vec<f64> = points.iter().map(|p| p.r_sa).collect();
    let sr: Vec<f64> = points.iter().map(|p| p.r_sigma).collect();
    let g: Vec<f64> = points.iter().map(|p| p.gamma_m_hz).collect();
    let sg: Vec<f64> = points.iter().map(|p| p.gamma_sigma).collect();

    let ratio_fit = weighted_linear_fit(&x, &r, &sr)?;
    let linewidth_fit = weighted_linear_fit(&x, &g, &sg)?;
    if !(ratio_fit.slope > 0.0) {
        return Err(Error::NegativeSlope("sideband ratio"));
    }
    if !(linewidth_fit.slope > 0.0) {
        return Err(Error::NegativeSlope("linewidth"));
    }
    let n_th = linewidth_fit.slope / (ratio_fit.slope * gamma0_hz);
    let rel = ((ratio_fit.slope_sigma() / ratio_fit.slope).powi(2)
        + (linewidth_fit.slope_sigma() / linewidth_fit.slope).powi(2)
        + cal.relative_sigma().powi(2))
    .sqrt();
    let n_sigma = n_th * rel;
    let t0 = temperature_from_occupation(n_th, freq_hz, consts)?;
    let t0_sigma = n_sigma * temperature_slope(n_th, freq_hz, consts);

    let direct = weighted_linear_fit(&g, &r, &sr)
        .ok()
        .map(|f| 1.0 / (f.slope * gamma0_hz))
        .filter(|n| n.is_finite());

    let mut systematics = ThermometryResult::empty_systematics(Unit::Kelvin);
    systematics[0] = Systematic {
        kind: SystematicKind::HeterodyneResidual,
        value: ratio_fit.intercept - (1.0 + 1.0 / n_th),
        unit: Unit::Ratio,
    };
    // A common bias (1+β_s)/(1+β_as) rescales the ratio slope.
    let beta = classical_bound.abs();
    systematics[3].value = t0 * 2.0 * beta / (1.0 - beta);
    let result = ThermometryResult {
        method: Method::Extrapolation,
        ratio: None,
        n_bar: Some(n_th),
        n_bar_sigma: Some(n_sigma),
        unbounded_consistent: false,
        t_eff_kelvin: None,
        t_eff_sigma: None,
        t0_kelvin: Some(t0),
        stat_sigma: t0_sigma,
        systematics,
    };
    Ok(Extrapolation {
        ratio_fit,
        linewidth_fit,
        n_th_raw: n_th,
        n_th_sigma: n_sigma,
        n_th_direct: direct,
        t0_raw_kelvin: t0,
        result,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackactionCorrection {
    /// Occupation added to the extrapolated value by the probe, `Γ_qba/Γ0`.
    pub quanta: f64,
    pub n_th_corrected: f64,
    pub t0_raw: f64,
    pub t0_corrected: f64,
    /// `t0_raw - t0_corrected`.
    pub kelvin: f64,
}

/// Probe heating at rate `Γ_qba` raises every occupation of a sweep by
/// `Γ_qba/Γm`, which the extrapolation turns into an offset of exactly
/// `Γ_qba/Γ0` in the bath occupation. `mode.gamma0_hz` must be the intrinsic
/// linewidth at the sweep's temperature.
pub fn backaction_correction(
    n_th_raw: f64,
    p_probe_watts: f64,
    mode: &MechMode,
    cavity: &CavityParams,
    probe: &BeamCoupling,
    consts: &PhysConsts,
) -> Result<BackactionCorrection> {
    let quanta = backaction_occupation(p_probe_watts, mode.gamma0_hz, mode, cavity, probe)?;
    let t0_raw = temperature_from_occupation(n_th_raw, mode.freq_hz, consts)?;
    let corrected = n_th_raw - quanta;
    let t0_corrected = temperature_from_occupation(corrected, mode.freq_hz, consts)?;
    Ok(BackactionCorrection {
        quanta,
        n_th_corrected: corrected,
        t0_raw,
        t0_corrected,
        kelvin: t0_raw - t0_corrected,
    })
}

/// One row of a band-centre sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandSweepRow {
    pub offset_hz: f64,
    pub ratio: RatioEstimate,
    pub n_bar: Option<f64>,
    pub t_eff_kelvin: Option<f64>,
    pub t_eff_sigma: Option<f64>,
}

/// Band-ratio temperature as the band centre moves by each of `offsets_hz`
/// around `center_hz`.
#[allow(clippy::too_many_arguments)]
pub fn band_center_sweep(
    stokes: &Periodogram,
    antistokes: &Periodogram,
    center_hz: f64,
    half_width_hz: f64,
    offsets_hz: &[f64],
    backgrounds: (&BackgroundEstimate, &BackgroundEstimate),
    cal: &HeterodyneCalibration,
    consts: &PhysConsts,
) -> Result<Vec<BandSweepRow>> {
    offsets_hz
        .iter()
        .map(|&offset| {
            let ratio = ratio_from_bands(
                stokes,
                antistokes,
                center_hz + offset,
                half_width_hz,
                backgrounds,
                cal,
            )?;
            let t = occupation_and_teff(&ratio, center_hz, 0.0, consts)?;
            Ok(BandSweepRow {
                offset_hz: offset,
                ratio,
                n_bar: t.n_bar,
                t_eff_kelvin: t.t_eff_kelvin,
                t_eff_sigma: t.t_eff_sigma,
            })
        })
        .collect()
}

/// Largest temperature change across a sweep relative to the temperature at
/// zero offset, or `None` if any row is unbounded or zero offset is absent.
pub fn band_sweep_relative_variation(rows: &[BandSweepRow]) -> Option<f64> {
    let reference = rows.iter().find(|r| r.offset_hz == 0.0)?.t_eff_kelvin?;
    let mut worst: f64 = 0.0;
    for r in rows {
        worst = worst.max((r.t_eff_kelvin? - reference).abs());
    }
    Some(worst / reference)
}

#[cfg(test)]
mod tests;
