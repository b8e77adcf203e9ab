//! Closed-form relations between occupation, temperature, sideband asymmetry
//! and the optically damped steady state of a mechanical mode.
//!
//! Every rate and frequency is an ordinary frequency in Hz (`Γ/2π`, `ω/2π`).
//! Quantum energies use `h ν` with `h = 2π ħ`.

use core::f64::consts::TAU;

// Shadowed by the inherent methods whenever std is in the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Below this value of `hν/kT` the Bose-Einstein occupation switches to its
/// Laurent expansion.
const SMALL_EXPONENT: f64 = 1e-12;

/// Linewidths above `κ / REGIME_FACTOR` are outside the validity of the
/// weak-coupling spectrum model.
const REGIME_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhysConsts {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub kb: f64,
}

impl PhysConsts {
    pub const CODATA: PhysConsts = PhysConsts {
        hbar: 1.054_571_817e-34,
        kb: 1.380_649e-23,
    };

    /// Planck constant `h = 2π ħ`.
    pub fn planck(&self) -> f64 {
        TAU * self.hbar
    }

    /// `h ν / k_B` in kelvin: the temperature equivalent of one quantum.
    pub fn quantum_kelvin(&self, freq_hz: f64) -> f64 {
        self.planck() * freq_hz / self.kb
    }
}

impl Default for PhysConsts {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Drumhead mode indices `(m, n)`: antinode counts along each membrane axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeLabel(pub u8, pub u8);

impl core::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MechMode {
    pub label: ModeLabel,
    /// Resonance frequency `ω_m / 2π`.
    pub freq_hz: f64,
    /// Intrinsic linewidth `Γ0 / 2π`.
    pub gamma0_hz: f64,
    /// Single-photon optomechanical coupling `g0 / 2π`.
    pub g0_hz: f64,
}

impl MechMode {
    pub fn new(label: ModeLabel, freq_hz: f64, gamma0_hz: f64, g0_hz: f64) -> Result<Self> {
        let mode = MechMode {
            label,
            freq_hz,
            gamma0_hz,
            g0_hz,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(Error::domain("freq_hz", "positive", self.freq_hz));
        }
        if !(self.gamma0_hz > 0.0) {
            return Err(Error::domain("gamma0_hz", "positive", self.gamma0_hz));
        }
        if !(self.gamma0_hz / self.freq_hz < 1e-2) {
            return Err(Error::domain(
                "gamma0_hz",
                "below 1e-2 of the mode frequency",
                self.gamma0_hz,
            ));
        }
        if !(self.g0_hz >= 0.0) {
            return Err(Error::domain("g0_hz", "non-negative", self.g0_hz));
        }
        Ok(())
    }

    /// Copy of the mode with a different intrinsic linewidth (Γ0 is tabulated
    /// per bath temperature).
    pub fn with_gamma0(mut self, gamma0_hz: f64) -> Result<Self> {
        self.gamma0_hz = gamma0_hz;
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CavityParams {
    /// Optical linewidth `κ / 2π`.
    pub kappa_hz: f64,
    pub wavelength_m: f64,
    /// Fraction of the incident beam power that couples into the cavity mode.
    pub input_efficiency: f64,
}

impl CavityParams {
    pub fn new(kappa_hz: f64, wavelength_m: f64, input_efficiency: f64) -> Result<Self> {
        let cavity = CavityParams {
            kappa_hz,
            wavelength_m,
            input_efficiency,
        };
        cavity.validate()?;
        Ok(cavity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_hz > 0.0) {
            return Err(Error::domain("kappa_hz", "positive", self.kappa_hz));
        }
        if !(self.wavelength_m > 0.0) {
            return Err(Error::domain("wavelength_m", "positive", self.wavelength_m));
        }
        if !(self.input_efficiency > 0.0 && self.input_efficiency <= 1.0) {
            return Err(Error::domain(
                "input_efficiency",
                "in (0, 1]",
                self.input_efficiency,
            ));
        }
        Ok(())
    }

    pub fn laser_freq_hz(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Environment {
    /// Cryostat bath temperature T0.
    pub t0_kelvin: f64,
}

impl Environment {
    pub fn new(t0_kelvin: f64) -> Result<Self> {
        if !(t0_kelvin > 0.0) {
            return Err(Error::domain("t0_kelvin", "positive", t0_kelvin));
        }
        Ok(Environment { t0_kelvin })
    }
}

/// Power-to-photon conversion of one beam: resonant intracavity photon
/// number per watt of incident power.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeamCoupling {
    pub photons_per_watt: f64,
}

impl BeamCoupling {
    pub fn new(photons_per_watt: f64) -> Result<Self> {
        if !(photons_per_watt >= 0.0 && photons_per_watt.is_finite()) {
            return Err(Error::domain(
                "photons_per_watt",
                "finite and >= 0",
                photons_per_watt,
            ));
        }
        Ok(BeamCoupling { photons_per_watt })
    }

    /// Default conversion for a beam on cavity resonance:
    /// `n_c = 4 η P / (h ν_L κ)` with κ in angular units.
    pub fn resonant(cavity: &CavityParams, consts: &PhysConsts) -> Self {
        let photon_energy = consts.planck() * cavity.laser_freq_hz();
        BeamCoupling {
            photons_per_watt: 4.0 * cavity.input_efficiency
                / (photon_energy * TAU * cavity.kappa_hz),
        }
    }

    pub fn photons(&self, power_watts: f64) -> f64 {
        self.photons_per_watt * power_watts
    }
}

/// Beam conversions and switches that set the operating point of a device.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Couplings {
    pub damping: BeamCoupling,
    pub probe: BeamCoupling,
    /// Include shot-noise backaction of the probe in the occupation.
    pub backaction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DampedState {
    /// Total damped linewidth `Γm / 2π`.
    pub gamma_m_hz: f64,
    pub n_bar: f64,
    pub n_th_damped: f64,
    pub n_ba: f64,
}

fn bose_einstein(x: f64) -> f64 {
    if x < SMALL_EXPONENT {
        1.0 / x - 0.5 + x / 12.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// Bose-Einstein occupation `1 / (e^{hν/kT} - 1)`.
pub fn thermal_occupation(freq_hz: f64, t_kelvin: f64, consts: &PhysConsts) -> Result<f64> {
    if !(freq_hz > 0.0) {
        return Err(Error::domain("freq_hz", "positive", freq_hz));
    }
    if !(t_kelvin > 0.0) {
        return Err(Error::domain("t_kelvin", "positive", t_kelvin));
    }
    Ok(bose_einstein(consts.quantum_kelvin(freq_hz) / t_kelvin))
}

/// Temperature at which a thermal state of frequency `freq_hz` holds `n_bar`
/// quanta; exact inverse of [`thermal_occupation`].
pub fn temperature_from_occupation(n_bar: f64, freq_hz: f64, consts: &PhysConsts) -> Result<f64> {
    if !(n_bar > 0.0) {
        return Err(Error::domain("n_bar", "positive", n_bar));
    }
    if !(freq_hz > 0.0) {
        return Err(Error::domain("freq_hz", "positive", freq_hz));
    }
    Ok(consts.quantum_kelvin(freq_hz) / (1.0 / n_bar).ln_1p())
}

/// Occupation expressed as `n h ν / k_B`, the quanta-scale temperature often
/// quoted for modes near the ground state.
pub fn quanta_temperature(n_bar: f64, freq_hz: f64, consts: &PhysConsts) -> f64 {
    n_bar * consts.quantum_kelvin(freq_hz)
}

/// Stokes/anti-Stokes ratio `(n + 1) / n`.
pub fn sideband_ratio(n_bar: f64) -> Result<f64> {
    if !(n_bar > 0.0) {
        return Err(Error::domain("n_bar", "positive", n_bar));
    }
    Ok((n_bar + 1.0) / n_bar)
}

/// Occupation `1 / (R - 1)` from a sideband ratio. Ratios at or below one are
/// reported as [`Error::NonPhysicalRatio`], which usually means statistical
/// scatter or a miscalibrated heterodyne response.
pub fn occupation_from_ratio(r_sa: f64) -> Result<f64> {
    if !(r_sa > 1.0) || !r_sa.is_finite() {
        return Err(Error::NonPhysicalRatio(r_sa));
    }
    Ok(1.0 / (r_sa - 1.0))
}

/// Rate `4 g0² n_c / κ` (Hz) for `photons` intracavity photons. It is both the
/// resolved-sideband optical damping of a red-detuned beam and the shot-noise
/// heating rate of a resonant probe.
pub fn scattering_rate(mode: &MechMode, cavity: &CavityParams, photons: f64) -> f64 {
    4.0 * mode.g0_hz * mode.g0_hz * photons / cavity.kappa_hz
}

/// Optical damping `Γ_opt / 2π` added by the damping beam; linear in power.
pub fn optical_damping_rate(
    p_damp_watts: f64,
    mode: &MechMode,
    cavity: &CavityParams,
    damping: &BeamCoupling,
) -> Result<f64> {
    if !(p_damp_watts >= 0.0) {
        return Err(Error::domain("p_damp_watts", "non-negative", p_damp_watts));
    }
    Ok(scattering_rate(mode, cavity, damping.photons(p_damp_watts)))
}

/// Backaction occupation `Γ_qba / Γm` driven by probe shot noise.
pub fn backaction_occupation(
    p_probe_watts: f64,
    gamma_m_hz: f64,
    mode: &MechMode,
    cavity: &CavityParams,
    probe: &BeamCoupling,
) -> Result<f64> {
    if !(p_probe_watts >= 0.0) {
        return Err(Error::domain(
            "p_probe_watts",
            "non-negative",
            p_probe_watts,
        ));
    }
    if !(gamma_m_hz > 0.0) {
        return Err(Error::domain("gamma_m_hz", "positive", gamma_m_hz));
    }
    Ok(scattering_rate(mode, cavity, probe.photons(p_probe_watts)) / gamma_m_hz)
}

/// Steady state of a mode cooled by the damping beam and heated by the probe:
/// `Γm = Γ0 + Γ_opt`, `n = n_th(T0) Γ0/Γm + n_ba`.
pub fn damped_state(
    mode: &MechMode,
    cavity: &CavityParams,
    env: &Environment,
    p_damp_watts: f64,
    p_probe_watts: f64,
    couplings: &Couplings,
    consts: &PhysConsts,
) -> Result<DampedState> {
    let gamma_opt = optical_damping_rate(p_damp_watts, mode, cavity, &couplings.damping)?;
    let gamma_m_hz = mode.gamma0_hz + gamma_opt;
    if gamma_m_hz >= cavity.kappa_hz / REGIME_FACTOR {
        return Err(Error::RegimeViolation {
            gamma_m_hz,
            kappa_hz: cavity.kappa_hz,
        });
    }
    let n_th = thermal_occupation(mode.freq_hz, env.t0_kelvin, consts)?;
    let n_th_damped = n_th * mode.gamma0_hz / gamma_m_hz;
    let n_ba = if couplings.backaction {
        backaction_occupation(p_probe_watts, gamma_m_hz, mode, cavity, &couplings.probe)?
    } else {
        0.0
    };
    Ok(DampedState {
        gamma_m_hz,
        n_bar: n_th_damped + n_ba,
        n_th_damped,
        n_ba,
    })
}

/// Effective temperature `T0 Γ0 / Γm` of a sideband-cooled mode.
pub fn effective_temperature(t0_kelvin: f64, gamma0_hz: f64, gamma_m_hz: f64) -> f64 {
    t0_kelvin * gamma0_hz / gamma_m_hz
}

/// `|g χ(ω)|²` for the damped susceptibility `χ(ω) = (Γm/2 - i(ω - ω_m))⁻¹`,
/// all quantities in Hz.
pub fn response_strength(g0_hz: f64, center_hz: f64, gamma_m_hz: f64, at_hz: f64) -> f64 {
    let half = 0.5 * gamma_m_hz;
    let detuning = at_hz - center_hz;
    g0_hz * g0_hz / (half * half + detuning * detuning)
}
