//! One operating point: synthesise spectra, calibrate, fit, estimate.

use raman_core::physics::{damped_state, DampedState, Environment, PhysConsts};
use raman_core::rng::derive_seed;
use raman_core::spectrum::{
    calibration_tone_pair, compose_model, noiseless_periodogram, synthesize_periodogram,
    Periodogram, SpectrumModel, WindowId,
};
use raman_core::thermometry::{
    band_center_sweep, fit_backgrounds, fit_sideband_pair, heterodyne_calibration,
    occupation_and_teff, ratio_from_bands, ratio_from_peak_fits, BandSweepRow,
    HeterodyneCalibration, RatioEstimate, RatioPoint, SidebandFit, ThermometryResult,
};
use serde::{Deserialize, Serialize};

use crate::config::CampaignConfig;
use crate::error::{Context, Result};

/// Child-seed slot used for calibration tones, outside any power index.
pub const TONE_SLOT: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub t0_kelvin: f64,
    pub p_damp_watts: f64,
    pub p_probe_watts: f64,
}

impl OperatingPoint {
    pub fn strongest(cfg: &CampaignConfig, t0_kelvin: f64) -> Self {
        OperatingPoint {
            t0_kelvin,
            p_damp_watts: cfg.strongest_damping(),
            p_probe_watts: cfg.beams.probe_power_watts,
        }
    }
}

/// Noise realisation of a synthesised spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realization {
    Seeded(u64),
    /// Expected values, as if averaged forever.
    Noiseless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectra {
    pub stokes: Periodogram,
    pub antistokes: Periodogram,
}

pub fn model_at(
    cfg: &CampaignConfig,
    op: &OperatingPoint,
    consts: &PhysConsts,
) -> Result<SpectrumModel> {
    let device = cfg.device_at(op.t0_kelvin)?;
    let env = Environment::new(op.t0_kelvin).context(|| "bath temperature".into())?;
    compose_model(
        &device,
        &cfg.cavity,
        &env,
        op.p_damp_watts,
        op.p_probe_watts,
        &cfg.couplings(consts),
        &cfg.noise,
        consts,
    )
    .context(|| format!("spectrum model at {}", describe(op)))
}

pub fn truth_at(
    cfg: &CampaignConfig,
    op: &OperatingPoint,
    consts: &PhysConsts,
) -> Result<DampedState> {
    let device = cfg.device_at(op.t0_kelvin)?;
    let env = Environment::new(op.t0_kelvin).context(|| "bath temperature".into())?;
    damped_state(
        &device.mode,
        &cfg.cavity,
        &env,
        op.p_damp_watts,
        op.p_probe_watts,
        &cfg.couplings(consts),
        consts,
    )
    .context(|| format!("mode state at {}", describe(op)))
}

pub fn describe(op: &OperatingPoint) -> String {
    format!(
        "T0 = {} K, P_d = {:.3} uW, P_p = {:.3} uW",
        op.t0_kelvin,
        op.p_damp_watts * 1e6,
        op.p_probe_watts * 1e6
    )
}

pub fn synthesize(
    cfg: &CampaignConfig,
    model: &SpectrumModel,
    realization: Realization,
) -> Result<Spectra> {
    let a = &cfg.acquisition;
    let make = |window| match realization {
        Realization::Seeded(seed) => {
            synthesize_periodogram(model, window, a.span_hz, a.rbw_hz, a.n_avg, seed)
        }
        Realization::Noiseless => noiseless_periodogram(model, window, a.span_hz, a.rbw_hz),
    };
    Ok(Spectra {
        stokes: make(WindowId::Stokes).context(|| "Stokes spectrum".into())?,
        antistokes: make(WindowId::AntiStokes).context(|| "anti-Stokes spectrum".into())?,
    })
}

/// Tone pair measured on top of `model`, or `None` if calibration is off.
pub fn synthesize_tones(
    cfg: &CampaignConfig,
    model: &SpectrumModel,
    seed: u64,
) -> Result<Option<(Periodogram, Periodogram)>> {
    match cfg.tone_spec() {
        None => Ok(None),
        Some(tone) => calibration_tone_pair(model, &tone, seed)
            .map(Some)
            .context(|| "calibration tones".into()),
    }
}

pub fn calibrate(tones: Option<&(Periodogram, Periodogram)>) -> Result<HeterodyneCalibration> {
    match tones {
        None => Ok(HeterodyneCalibration::IDENTITY),
        Some((s, a)) => heterodyne_calibration(s, a).context(|| "heterodyne calibration".into()),
    }
}

/// Calibration an infinitely averaged tone pair would give.
pub fn exact_calibration(cfg: &CampaignConfig, model: &SpectrumModel) -> HeterodyneCalibration {
    match cfg.tone_spec() {
        None => HeterodyneCalibration::IDENTITY,
        Some(t) => HeterodyneCalibration {
            rho: model.het_response.eval(-t.freq_hz) / model.het_response.eval(t.freq_hz),
            sigma: 0.0,
        },
    }
}

/// Everything estimated from one pair of sideband spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAnalysis {
    pub calibration: HeterodyneCalibration,
    pub fit: SidebandFit,
    pub peak_ratio: RatioEstimate,
    pub band_ratio: Option<RatioEstimate>,
    /// Headline estimate: the peak ratio, or the band ratio when the peaks are
    /// not resolved.
    pub result: ThermometryResult,
    pub ratio_point: RatioPoint,
}

pub fn analyze_spectra(
    cfg: &CampaignConfig,
    spectra: &Spectra,
    cal: &HeterodyneCalibration,
    p_damp_watts: f64,
    consts: &PhysConsts,
) -> Result<PointAnalysis> {
    let window = cfg.fit_window()?;
    let fit = fit_sideband_pair(
        &spectra.stokes,
        &spectra.antistokes,
        &window,
        &cfg.analysis.fit,
    )
    .context(|| "joint sideband fit".into())?;
    let peak_ratio = ratio_from_peak_fits(&fit, cal);
    let (bg_s, bg_as) = fit_backgrounds(&fit);
    let band = ratio_from_bands(
        &spectra.stokes,
        &spectra.antistokes,
        fit.center_hz,
        cfg.analysis.band_half_width_hz,
        (&bg_s, &bg_as),
        cal,
    );
    let band_ratio = band.as_ref().ok().copied();
    let headline = if fit.resolution_limited {
        band.context(|| "band ratio of an unresolved peak".into())?
    } else {
        peak_ratio
    };
    let result = occupation_and_teff(
        &headline,
        cfg.device.mode.freq_hz,
        cfg.analysis.classical_bound,
        consts,
    )
    .context(|| "occupation".into())?;
    let ratio_point = RatioPoint::from_fit(p_damp_watts, &fit, cal);
    Ok(PointAnalysis {
        calibration: *cal,
        fit,
        peak_ratio,
        band_ratio,
        result,
        ratio_point,
    })
}

/// Band-ratio temperature against band-centre offset, using the backgrounds
/// and centre of a joint fit.
pub fn band_sensitivity(
    cfg: &CampaignConfig,
    spectra: &Spectra,
    analysis: &PointAnalysis,
    consts: &PhysConsts,
) -> Result<Vec<BandSweepRow>> {
    let (bg_s, bg_as) = fit_backgrounds(&analysis.fit);
    band_center_sweep(
        &spectra.stokes,
        &spectra.antistokes,
        analysis.fit.center_hz,
        cfg.analysis.band_half_width_hz,
        &cfg.analysis.band_sweep_offsets_hz,
        (&bg_s, &bg_as),
        &analysis.calibration,
        consts,
    )
    .context(|| "band-centre sweep".into())
}

/// Simulate and analyse one point end to end. Tones, when configured, share
/// the point's model and use a child seed.
pub fn run_point(
    cfg: &CampaignConfig,
    op: &OperatingPoint,
    realization: Realization,
    consts: &PhysConsts,
) -> Result<(Spectra, PointAnalysis)> {
    let model = model_at(cfg, op, consts)?;
    let spectra = synthesize(cfg, &model, realization)?;
    let cal = match realization {
        Realization::Seeded(s) => {
            let tones = synthesize_tones(cfg, &model, derive_seed(s, &[TONE_SLOT]))?;
            calibrate(tones.as_ref())?
        }
        Realization::Noiseless => exact_calibration(cfg, &model),
    };
    let analysis = analyze_spectra(cfg, &spectra, &cal, op.p_damp_watts, consts)?;
    Ok((spectra, analysis))
}

/// Seed of one campaign task.
pub fn point_seed(master: u64, env_index: usize, power_index: u64, replicate: u32) -> u64 {
    derive_seed(master, &[env_index as u64, power_index, replicate as u64])
}
