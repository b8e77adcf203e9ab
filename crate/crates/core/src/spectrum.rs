//! Heterodyne spectrum model of Raman sidebands and its periodogram
//! realisation.
//!
//! Frequencies are relative to the probe carrier: the anti-Stokes sideband
//! sits at `+ν_m`, the Stokes sideband at `-ν_m`. Mechanical terms are
//! normalised Lorentzians, so one quantum of occupation contributes unit area
//! times the scattering weight; the zero-point reference `S_zp` is then the
//! Stokes peak height of an empty mode at the same linewidth.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Shadowed by the inherent methods whenever std is in the build graph.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::physics::{
    damped_state, scattering_rate, CavityParams, Couplings, Environment, MechMode, PhysConsts,
};
use crate::rng::keyed_stream;
use crate::{Error, Result};

/// Largest fractional classical-noise bias accepted on either sideband.
pub const MAX_CLASSICAL_BIAS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum WindowId {
    Stokes,
    AntiStokes,
    Calibration,
}

impl WindowId {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowId::Stokes => "stokes",
            WindowId::AntiStokes => "antistokes",
            WindowId::Calibration => "calibration",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stokes" => Some(WindowId::Stokes),
            "antistokes" => Some(WindowId::AntiStokes),
            "calibration" => Some(WindowId::Calibration),
            _ => None,
        }
    }

    fn stream_domain(self) -> u16 {
        match self {
            WindowId::Stokes => 1,
            WindowId::AntiStokes => 2,
            WindowId::Calibration => 3,
        }
    }

    /// Sign of the sideband offset from the carrier.
    pub fn sign(self) -> f64 {
        match self {
            WindowId::Stokes => -1.0,
            _ => 1.0,
        }
    }
}

/// Normalised Lorentzian line shape (unit area) with FWHM `gamma_hz`.
pub fn lorentzian_density(freq_hz: f64, center_hz: f64, gamma_hz: f64) -> f64 {
    let half = 0.5 * gamma_hz;
    let d = freq_hz - center_hz;
    half / (PI * (half * half + d * d))
}

/// Detection response `h(ν) = c0 + c1 x + c2 x²`, `x = ν / scale_hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HetResponse {
    pub coeffs: [f64; 3],
    pub scale_hz: f64,
}

impl HetResponse {
    pub fn flat() -> Self {
        HetResponse {
            coeffs: [1.0, 0.0, 0.0],
            scale_hz: 1.0,
        }
    }

    /// `h(ν) = 1 + tilt ν / scale_hz`.
    pub fn tilted(tilt: f64, scale_hz: f64) -> Self {
        HetResponse {
            coeffs: [1.0, tilt, 0.0],
            scale_hz,
        }
    }

    pub fn eval(&self, freq_hz: f64) -> f64 {
        let x = freq_hz / self.scale_hz;
        self.coeffs[0] + x * (self.coeffs[1] + x * self.coeffs[2])
    }
}

impl Default for HetResponse {
    fn default() -> Self {
        Self::flat()
    }
}

/// Static fractional bias of each sideband from classical laser-noise
/// correlations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassicalBias {
    pub stokes: f64,
    pub antistokes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MechanicalPeak {
    pub freq_hz: f64,
    pub gamma_hz: f64,
    pub n_bar: f64,
}

/// Nearly degenerate mode seen next to the primary one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectatorPeak {
    /// Frequency offset from the primary mode.
    pub offset_hz: f64,
    pub gamma_hz: f64,
    pub n_bar: f64,
    /// Scattering strength relative to the primary mode, `(g0' / g0)²`.
    pub response_weight: f64,
}

/// Thermal substrate feature, added with equal weight at `±freq_hz`
/// independent of damping.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubstrateLine {
    pub freq_hz: f64,
    pub gamma_hz: f64,
    /// Integrated strength in quanta of equivalent motion.
    pub area_quanta: f64,
}

/// Everything except the mechanical state that shapes a measured spectrum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseConfig {
    pub substrate_lines: Vec<SubstrateLine>,
    /// Flat detection-noise floor in units of scattered quanta per Hz.
    pub white_background: f64,
    pub classical_bias: ClassicalBias,
    pub het_response: HetResponse,
    /// Fraction of the scattered sideband flux that is detected.
    pub detection_efficiency: f64,
    pub gain: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            substrate_lines: Vec::new(),
            white_background: 1.0,
            classical_bias: ClassicalBias::default(),
            het_response: HetResponse::flat(),
            detection_efficiency: 1.0,
            gain: 1.0,
        }
    }
}

/// Mechanical modes visible in the analysis windows.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Device {
    pub mode: MechMode,
    pub spectator: Option<MechMode>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumModel {
    pub primary: MechanicalPeak,
    pub spectators: Vec<SpectatorPeak>,
    pub substrate_lines: Vec<SubstrateLine>,
    /// Detected sideband flux per quantum (Hz).
    pub scatter_weight: f64,
    /// Flat floor in quanta per Hz, scaled like the sidebands.
    pub white_background: f64,
    pub gain: f64,
    pub het_response: HetResponse,
    pub classical_bias: ClassicalBias,
}

impl SpectrumModel {
    /// Bare two-sideband model: unit scattering weight, no background, flat
    /// response, no bias.
    pub fn bare(freq_hz: f64, gamma_hz: f64, n_bar: f64) -> Self {
        SpectrumModel {
            primary: MechanicalPeak {
                freq_hz,
                gamma_hz,
                n_bar,
            },
            spectators: Vec::new(),
            substrate_lines: Vec::new(),
            scatter_weight: 1.0,
            white_background: 0.0,
            gain: 1.0,
            het_response: HetResponse::flat(),
            classical_bias: ClassicalBias::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.primary;
        if !(p.freq_hz > 0.0) {
            return Err(Error::domain("primary.freq_hz", "positive", p.freq_hz));
        }
        if !(p.n_bar >= 0.0) {
            return Err(Error::domain("primary.n_bar", "non-negative", p.n_bar));
        }
        let gammas = core::iter::once(p.gamma_hz)
            .chain(self.spectators.iter().map(|s| s.gamma_hz))
            .chain(self.substrate_lines.iter().map(|s| s.gamma_hz));
        for g in gammas {
            if !(g > 0.0) {
                return Err(Error::domain("gamma_hz", "positive", g));
            }
        }
        if !(self.gain > 0.0) {
            return Err(Error::domain("gain", "positive", self.gain));
        }
        if !(self.scatter_weight >= 0.0) {
            return Err(Error::domain(
                "scatter_weight",
                "non-negative",
                self.scatter_weight,
            ));
        }
        if !(self.white_background >= 0.0) {
            return Err(Error::domain(
                "white_background",
                "non-negative",
                self.white_background,
            ));
        }
        for beta in [self.classical_bias.stokes, self.classical_bias.antistokes] {
            if !(beta.abs() <= MAX_CLASSICAL_BIAS) {
                return Err(Error::domain("classical_bias", "within ±0.05", beta));
            }
        }
        for f in [-p.freq_hz, p.freq_hz] {
            let h = self.het_response.eval(f);
            if !(h > 0.0) {
                return Err(Error::domain("het_response", "positive in both windows", h));
            }
        }
        Ok(())
    }

    /// Noiseless power spectral density in detector units. Negative
    /// frequencies carry only the Stokes sideband terms and positive ones only
    /// the anti-Stokes terms: the opposite sideband sits `2ν_m` away and is
    /// not part of either analysis window.
    pub fn ideal_psd(&self, freq_hz: f64) -> f64 {
        let beta = &self.classical_bias;
        let offset = freq_hz.abs();
        let stokes = freq_hz < 0.0;
        let sideband = |center: f64, gamma: f64, n_bar: f64| {
            let l = lorentzian_density(offset, center, gamma);
            if stokes {
                (1.0 + beta.stokes) * (n_bar + 1.0) * l
            } else {
                (1.0 + beta.antistokes) * n_bar * l
            }
        };
        let p = &self.primary;
        let mut quanta = sideband(p.freq_hz, p.gamma_hz, p.n_bar);
        for s in &self.spectators {
            quanta += s.response_weight * sideband(p.freq_hz + s.offset_hz, s.gamma_hz, s.n_bar);
        }
        quanta += self.substrate_quanta(freq_hz);
        self.gain
            * self.het_response.eval(freq_hz)
            * self.scatter_weight
            * (quanta + self.white_background)
    }

    /// Substrate contribution in quanta per Hz; even in frequency.
    pub fn substrate_quanta(&self, freq_hz: f64) -> f64 {
        let offset = freq_hz.abs();
        self.substrate_lines
            .iter()
            .map(|line| line.area_quanta * lorentzian_density(offset, line.freq_hz, line.gamma_hz))
            .sum()
    }

    /// Stokes peak height of an empty mode at the primary linewidth: the
    /// detector-unit size of one quantum.
    pub fn zero_point_peak(&self) -> f64 {
        let p = &self.primary;
        self.gain * self.het_response.eval(-p.freq_hz) * self.scatter_weight * 2.0
            / (PI * p.gamma_hz)
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        SpectrumModel {
            gain,
            ..self.clone()
        }
    }
}

/// Assemble the spectrum model of `device` at one damping/probe operating
/// point.
#[allow(clippy::too_many_arguments)]
pub fn compose_model(
    device: &Device,
    cavity: &CavityParams,
    env: &Environment,
    p_damp_watts: f64,
    p_probe_watts: f64,
    couplings: &Couplings,
    noise: &NoiseConfig,
    consts: &PhysConsts,
) -> Result<SpectrumModel> {
    let state = damped_state(
        &device.mode,
        cavity,
        env,
        p_damp_watts,
        p_probe_watts,
        couplings,
        consts,
    )?;
    let mode = &device.mode;
    let scatter_weight = noise.detection_efficiency
        * scattering_rate(mode, cavity, couplings.probe.photons(p_probe_watts));
    let mut spectators = Vec::new();
    if let Some(spec) = &device.spectator {
        let s = damped_state(
            spec,
            cavity,
            env,
            p_damp_watts,
            p_probe_watts,
            couplings,
            consts,
        )?;
        let response_weight = if mode.g0_hz > 0.0 {
            (spec.g0_hz / mode.g0_hz).powi(2)
        } else {
            0.0
        };
        spectators.push(SpectatorPeak {
            offset_hz: spec.freq_hz - mode.freq_hz,
            gamma_hz: s.gamma_m_hz,
            n_bar: s.n_bar,
            response_weight,
        });
    }
    let model = SpectrumModel {
        primary: MechanicalPeak {
            freq_hz: mode.freq_hz,
            gamma_hz: state.gamma_m_hz,
            n_bar: state.n_bar,
        },
        spectators,
        substrate_lines: noise.substrate_lines.clone(),
        scatter_weight,
        white_background: noise.white_background,
        gain: noise.gain,
        het_response: noise.het_response,
        classical_bias: noise.classical_bias,
    };
    model.validate()?;
    Ok(model)
}

/// Averaged power spectrum on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Periodogram {
    pub window: WindowId,
    /// Bin centres relative to the carrier, ascending, spaced by `rbw_hz`.
    pub freqs_hz: Vec<f64>,
    pub values: Vec<f64>,
    pub rbw_hz: f64,
    pub n_avg: u32,
    pub seed: u64,
}

impl Periodogram {
    pub fn new(
        window: WindowId,
        freqs_hz: Vec<f64>,
        values: Vec<f64>,
        rbw_hz: f64,
        n_avg: u32,
        seed: u64,
    ) -> Result<Self> {
        let pg = Periodogram {
            window,
            freqs_hz,
            values,
            rbw_hz,
            n_avg,
            seed,
        };
        pg.validate()?;
        Ok(pg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs_hz.len() != self.values.len() {
            return Err(Error::Config(
                "frequency and value columns differ in length".into(),
            ));
        }
        if self.freqs_hz.len() < 2 {
            return Err(Error::Config("periodogram needs at least two bins".into()));
        }
        if !(self.rbw_hz > 0.0) {
            return Err(Error::domain("rbw_hz", "positive", self.rbw_hz));
        }
        if self.n_avg == 0 {
            return Err(Error::domain("n_avg", ">= 1", 0.0));
        }
        for w in self.freqs_hz.windows(2) {
            let step = w[1] - w[0];
            if ((step - self.rbw_hz) / self.rbw_hz).abs() > 1e-6 {
                return Err(Error::Config(
                    "bins must be uniformly spaced by rbw_hz".into(),
                ));
            }
        }
        if let Some(v) = self.values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::domain("psd", "non-negative", *v));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lo_hz(&self) -> f64 {
        self.freqs_hz[0]
    }

    pub fn hi_hz(&self) -> f64 {
        self.freqs_hz[self.freqs_hz.len() - 1]
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Periodogram {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Reflect about the carrier: `ν -> -ν`, keeping bins ascending.
    pub fn mirrored(&self, window: WindowId) -> Self {
        Periodogram {
            window,
            freqs_hz: self.freqs_hz.iter().rev().map(|f| -f).collect(),
            values: self.values.iter().rev().copied().collect(),
            ..self.clone()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs_hz
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }
}

/// Odd-length grid of `span_hz / rbw_hz` bins centred on `center_hz`.
pub fn bin_grid(center_hz: f64, span_hz: f64, rbw_hz: f64) -> Result<Vec<f64>> {
    if !(rbw_hz > 0.0) {
        return Err(Error::Config(alloc::format!(
            "rbw_hz must be positive, got {rbw_hz}"
        )));
    }
    if !(span_hz >= 4.0 * rbw_hz) || !span_hz.is_finite() {
        return Err(Error::Config(alloc::format!(
            "span_hz {span_hz} must cover at least 4 bins of {rbw_hz} Hz"
        )));
    }
    let half = (span_hz / (2.0 * rbw_hz)).floor() as i64;
    Ok((-half..=half)
        .map(|k| center_hz + k as f64 * rbw_hz)
        .collect())
}

fn window_center(model: &SpectrumModel, window: WindowId) -> Result<f64> {
    match window {
        WindowId::Stokes | WindowId::AntiStokes => Ok(window.sign() * model.primary.freq_hz),
        WindowId::Calibration => Err(Error::Config(
            "calibration windows are produced by calibration_tone_pair".into(),
        )),
    }
}

fn ideal_values(model: &SpectrumModel, freqs: &[f64]) -> Result<Vec<f64>> {
    freqs
        .iter()
        .map(|&f| {
            if model.het_response.eval(f) <= 0.0 {
                return Err(Error::domain("het_response", "positive over the window", f));
            }
            Ok(model.ideal_psd(f))
        })
        .collect()
}

/// Noise-free periodogram of one sideband window (the `n_avg -> ∞` limit).
pub fn noiseless_periodogram(
    model: &SpectrumModel,
    window: WindowId,
    span_hz: f64,
    rbw_hz: f64,
) -> Result<Periodogram> {
    model.validate()?;
    let freqs = bin_grid(window_center(model, window)?, span_hz, rbw_hz)?;
    let values = ideal_values(model, &freqs)?;
    Periodogram::new(window, freqs, values, rbw_hz, u32::MAX, 0)
}

/// Realise an `n_avg`-segment averaged periodogram of one sideband window.
/// Bin `k` is `ideal_psd × Gamma(n_avg, 1/n_avg)`, drawn from the stream
/// keyed by `(seed, window, k)`.
pub fn synthesize_periodogram(
    model: &SpectrumModel,
    window: WindowId,
    span_hz: f64,
    rbw_hz: f64,
    n_avg: u32,
    seed: u64,
) -> Result<Periodogram> {
    model.validate()?;
    if n_avg == 0 {
        return Err(Error::Config("n_avg must be at least 1".into()));
    }
    let freqs = bin_grid(window_center(model, window)?, span_hz, rbw_hz)?;
    let mut values = ideal_values(model, &freqs)?;
    let spread = averaging_noise(n_avg);
    for (k, v) in values.iter_mut().enumerate() {
        let mut rng = keyed_stream(seed, window.stream_domain(), k as u64);
        *v *= spread.sample(&mut rng);
    }
    Periodogram::new(window, freqs, values, rbw_hz, n_avg, seed)
}

fn averaging_noise(n_avg: u32) -> Gamma<f64> {
    let n = n_avg as f64;
    Gamma::new(n, 1.0 / n).expect("shape and scale are positive")
}

/// Bin value of an averaged periodogram containing a coherent tone of mean
/// power density `tone` on top of noise of mean density `noise`. The average of
/// `n` segments `|a + z_i|²` splits into `|a + z̄|²` plus an independent
/// `Gamma(n - 1, noise) / n` spread around the mean.
fn tone_bin<R: Rng + ?Sized>(tone: f64, noise: f64, n_avg: u32, rng: &mut R) -> f64 {
    let n = n_avg as f64;
    let sd = (noise / (2.0 * n)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let coherent = (tone.sqrt() + sd * re).powi(2) + (sd * im).powi(2);
    let incoherent = if n_avg > 1 {
        Gamma::new(n - 1.0, noise)
            .expect("shape and scale are positive")
            .sample(rng)
            / n
    } else {
        0.0
    };
    coherent + incoherent
}

/// Tone placement for a heterodyne calibration measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToneSpec {
    /// Modulation frequency; tones appear at `±freq_hz`.
    pub freq_hz: f64,
    /// Intrinsic power of each tone in PSD × Hz units before response and gain.
    pub power: f64,
    pub span_hz: f64,
    pub rbw_hz: f64,
    pub n_avg: u32,
}

/// Weak probe modulation seen through the detector: equal tones at
/// `±tone.freq_hz`, each scaled by `h(ν)` and the gain, on top of the model
/// spectrum. Returns `(stokes side, anti-Stokes side)`.
pub fn calibration_tone_pair(
    model: &SpectrumModel,
    tone: &ToneSpec,
    seed: u64,
) -> Result<(Periodogram, Periodogram)> {
    model.validate()?;
    if !(tone.freq_hz > 0.0) || !(tone.power > 0.0) || tone.n_avg == 0 {
        return Err(Error::Config(
            "tone needs positive frequency, power and n_avg".into(),
        ));
    }
    let side = |sign: f64, domain: u16| -> Result<Periodogram> {
        let center = sign * tone.freq_hz;
        let freqs = bin_grid(center, tone.span_hz, tone.rbw_hz)?;
        let mean = ideal_values(model, &freqs)?;
        let tone_bin_index = freqs.len() / 2;
        let spread = averaging_noise(tone.n_avg);
        let values = mean
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let mut rng = keyed_stream(seed, domain, k as u64);
                if k == tone_bin_index {
                    let t = model.gain * model.het_response.eval(center) * tone.power / tone.rbw_hz;
                    tone_bin(t, m, tone.n_avg, &mut rng)
                } else {
                    m * spread.sample(&mut rng)
                }
            })
            .collect();
        Periodogram::new(
            WindowId::Calibration,
            freqs,
            values,
            tone.rbw_hz,
            tone.n_avg,
            seed,
        )
    };
    Ok((side(-1.0, 4)?, side(1.0, 5)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{BeamCoupling, ModeLabel};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn empty_mode_has_no_anti_stokes_peak() {
        let m = SpectrumModel::bare(1e6, 500.0, 0.0);
        assert_eq!(m.ideal_psd(1e6), 0.0);
        assert!(m.ideal_psd(-1e6) > 0.0);
        assert!(rel(m.ideal_psd(-1e6), m.zero_point_peak()) < 1e-15);
    }

    #[test]
    fn peak_ratio_is_detailed_balance() {
        for n in [0.1, 2.0, 2.1, 37.0, 1e4] {
            let m = SpectrumModel::bare(2.637e6, 1e3, n);
            let r = m.ideal_psd(-2.637e6) / m.ideal_psd(2.637e6);
            assert!(rel(r, (n + 1.0) / n) < 1e-12, "{n}: {r}");
        }
    }

    #[test]
    fn substrate_is_mirror_symmetric() {
        let mut m = SpectrumModel::bare(1.509e6, 1e4, 2.0);
        m.substrate_lines.push(SubstrateLine {
            freq_hz: 1.49e6,
            gamma_hz: 700.0,
            area_quanta: 0.3,
        });
        for f in [1.485e6, 1.49e6, 1.4903e6, 1.51e6] {
            assert_eq!(m.substrate_quanta(f), m.substrate_quanta(-f));
            assert!(m.substrate_quanta(f) > 0.0);
        }
    }

    #[test]
    fn grid_is_odd_and_centred() {
        let g = bin_grid(1e6, 1000.0, 100.0).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[5], 1e6);
        assert!(bin_grid(0.0, 100.0, 0.0).is_err());
        assert!(bin_grid(0.0, 100.0, 100.0).is_err());
    }

    #[test]
    fn stokes_grid_mirrors_anti_stokes_grid() {
        let m = SpectrumModel::bare(2.637e6, 1e3, 3.0);
        let s = noiseless_periodogram(&m, WindowId::Stokes, 2e4, 100.0).unwrap();
        let a = noiseless_periodogram(&m, WindowId::AntiStokes, 2e4, 100.0).unwrap();
        let mirrored = a.mirrored(WindowId::Stokes);
        assert_eq!(s.freqs_hz, mirrored.freqs_hz);
    }

    #[test]
    fn synthesis_is_deterministic_and_seed_dependent() {
        let m = SpectrumModel::bare(1e6, 1e3, 3.0);
        let a = synthesize_periodogram(&m, WindowId::Stokes, 1e4, 100.0, 10, 42).unwrap();
        let b = synthesize_periodogram(&m, WindowId::Stokes, 1e4, 100.0, 10, 42).unwrap();
        let c = synthesize_periodogram(&m, WindowId::Stokes, 1e4, 100.0, 10, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(synthesize_periodogram(&m, WindowId::Calibration, 1e4, 100.0, 10, 1).is_err());
        assert!(synthesize_periodogram(&m, WindowId::Stokes, 1e4, 100.0, 0, 1).is_err());
    }

    #[test]
    fn gain_scales_bins() {
        let mut m = SpectrumModel::bare(1e6, 1e3, 3.0);
        m.white_background = 1e-4;
        let a = synthesize_periodogram(&m, WindowId::AntiStokes, 1e4, 100.0, 10, 5).unwrap();
        for g in [1e-3, 7.0, 1e3] {
            let b =
                synthesize_periodogram(&m.with_gain(g), WindowId::AntiStokes, 1e4, 100.0, 10, 5)
                    .unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!(rel(*y, g * x) < 1e-14);
            }
        }
    }

    #[test]
    fn huge_averaging_converges_to_ideal() {
        let mut m = SpectrumModel::bare(1e6, 1e3, 3.0);
        m.white_background = 1e-4;
        let ideal = noiseless_periodogram(&m, WindowId::Stokes, 1e4, 100.0).unwrap();
        let pg = synthesize_periodogram(&m, WindowId::Stokes, 1e4, 100.0, 1_000_000, 9).unwrap();
        for (x, y) in pg.values.iter().zip(&ideal.values) {
            // 5σ of a 1e-3 relative spread.
            assert!(rel(*x, *y) < 5e-3);
            assert!(rel(*x, *y) < 0.01);
        }
    }

    #[test]
    fn compose_uses_damped_state() {
        let consts = PhysConsts::CODATA;
        let mode = MechMode::new(ModeLabel(3, 2), 2.637e6, 0.84, 18.0).unwrap();
        let spec = MechMode::new(ModeLabel(2, 3), 2.637e6 + 7.2e3, 0.84, 4.5).unwrap();
        let cavity = CavityParams::new(2.7e6, 1064e-9, 1.0).unwrap();
        let env = Environment::new(4.8).unwrap();
        let couplings = Couplings {
            damping: BeamCoupling::resonant(&cavity, &consts),
            probe: BeamCoupling::resonant(&cavity, &consts),
            backaction: false,
        };
        let device = Device {
            mode,
            spectator: Some(spec),
        };
        let noise = NoiseConfig::default();
        let undamped = compose_model(
            &device, &cavity, &env, 0.0, 26e-6, &couplings, &noise, &consts,
        )
        .unwrap();
        assert_eq!(undamped.primary.gamma_hz, 0.84);
        let damped = compose_model(
            &device, &cavity, &env, 10e-6, 26e-6, &couplings, &noise, &consts,
        )
        .unwrap();
        let s = damped.spectators[0];
        assert!(rel(s.offset_hz, 7.2e3) < 1e-9);
        assert!(rel(s.response_weight, 1.0 / 16.0) < 1e-15);
        assert!(s.gamma_hz < damped.primary.gamma_hz);
        assert_eq!(damped.substrate_lines, undamped.substrate_lines);
    }

    #[test]
    fn tone_pair_ratio_follows_response() {
        let mut m = SpectrumModel::bare(2e6, 1e3, 3.0);
        m.white_background = 1e-6;
        m.het_response = HetResponse::tilted(0.01, 2e6);
        let tone = ToneSpec {
            freq_hz: 2.01e6,
            power: 1e4,
            span_hz: 2e3,
            rbw_hz: 100.0,
            n_avg: 100,
        };
        let (s, a) = calibration_tone_pair(&m, &tone, 3).unwrap();
        let mid = s.len() / 2;
        assert_eq!(s.freqs_hz[mid], -2.01e6);
        assert_eq!(a.freqs_hz[mid], 2.01e6);
        let expected = m.het_response.eval(-2.01e6) / m.het_response.eval(2.01e6);
        let r = s.values[mid] / a.values[mid];
        assert!(rel(r, expected) < 1e-3, "{r} vs {expected}");
    }
}
