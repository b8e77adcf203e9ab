//! Named configurations for the two devices and their operating points.
//!
//! Averaging counts and background floors are tuned conventions: the
//! experiment does not report them.

use raman_core::fit::FitOptions;
use raman_core::physics::{
    thermal_occupation, BeamCoupling, CavityParams, MechMode, ModeLabel, PhysConsts,
};
use raman_core::spectrum::{ClassicalBias, HetResponse, NoiseConfig, SubstrateLine};

use crate::config::{
    Acquisition, AnalysisConfig, BeamConfig, CampaignConfig, DeviceConfig, Gamma0Entry, ProbeSweep,
    Seeds, ToneConfig, SCHEMA_VERSION,
};
use crate::error::{CliError, Result};

pub const NAMES: [&str; 4] = ["fig2-22", "fig3-32", "fig3-52", "fig3d-32"];

const WAVELENGTH_M: f64 = 1064e-9;
const INPUT_EFFICIENCY: f64 = 0.084;
const T_BASE: f64 = 4.8;

/// Occupation of the (2,2) mode at the strongest damping of `fig2-22`.
pub const FIG2_TARGET_OCCUPATION: f64 = 2.1;

pub fn by_name(name: &str) -> Result<CampaignConfig> {
    match name {
        "fig2-22" => fig2_22(FIG2_TARGET_OCCUPATION),
        "fig3-32" => Ok(fig3_32()),
        "fig3-52" => Ok(fig3_52()),
        "fig3d-32" => Ok(fig3d_32()),
        other => Err(CliError::config(
            "preset",
            format!("unknown preset {other:?}; known: {}", NAMES.join(", ")),
        )),
    }
}

fn mode(label: (u8, u8), freq_hz: f64, gamma0_hz: f64, g0_hz: f64) -> MechMode {
    MechMode::new(ModeLabel(label.0, label.1), freq_hz, gamma0_hz, g0_hz)
        .expect("preset mode is valid")
}

fn cavity(kappa_hz: f64) -> CavityParams {
    CavityParams::new(kappa_hz, WAVELENGTH_M, INPUT_EFFICIENCY).expect("preset cavity is valid")
}

fn micro(powers: &[f64]) -> Vec<f64> {
    powers.iter().map(|p| p * 1e-6).collect()
}

/// (2,2) mode, `P_p = 5 μW`, damped so the strongest point of the sweep sits
/// at `target_n` quanta including probe heating.
pub fn fig2_22(target_n: f64) -> Result<CampaignConfig> {
    let consts = PhysConsts::CODATA;
    let m = mode((2, 2), 1.509e6, 0.46, 33.0);
    let cav = cavity(1.8e6);
    let p_probe = 5e-6;
    let damp = micro(&[0.5, 1.0, 1.5, 3.0, 5.0, 7.7]);
    let p_max = *damp.last().unwrap();

    let probe = BeamCoupling::resonant(&cav, &consts);
    let gamma_qba = raman_core::physics::scattering_rate(&m, &cav, probe.photons(p_probe));
    let n_th = thermal_occupation(m.freq_hz, T_BASE, &consts)
        .map_err(|e| CliError::config("environments", e.to_string()))?;
    if !(target_n > 0.0) {
        return Err(CliError::config("target occupation", "must be positive"));
    }
    let gamma_m = (n_th * m.gamma0_hz + gamma_qba) / target_n;
    let gamma_opt = gamma_m - m.gamma0_hz;
    if !(gamma_opt > 0.0) {
        return Err(CliError::config(
            "target occupation",
            format!("{target_n} quanta needs no damping"),
        ));
    }
    let per_watt = gamma_opt * cav.kappa_hz / (4.0 * m.g0_hz * m.g0_hz * p_max);

    let substrate = [
        (1.472e6, 600.0, 0.15),
        (1.478e6, 800.0, 0.15),
        (1.485e6, 500.0, 0.15),
        (1.491e6, 700.0, 0.15),
        (1.497e6, 300.0, 0.15),
        (1.506e6, 400.0, 0.10),
    ]
    .into_iter()
    .map(|(freq_hz, gamma_hz, area_quanta)| SubstrateLine {
        freq_hz,
        gamma_hz,
        area_quanta,
    })
    .collect();

    Ok(CampaignConfig {
        schema_version: SCHEMA_VERSION,
        name: "fig2-22".into(),
        device: DeviceConfig {
            mode: m,
            spectator: None,
            gamma0_table: Vec::new(),
        },
        cavity: cav,
        beams: BeamConfig {
            probe_power_watts: p_probe,
            damp_powers_watts: damp,
            backaction: true,
            damping_photons_per_watt: Some(per_watt),
            probe_photons_per_watt: None,
        },
        environments: vec![T_BASE],
        noise: NoiseConfig {
            substrate_lines: substrate,
            white_background: 1e-5,
            classical_bias: ClassicalBias::default(),
            het_response: HetResponse::flat(),
            detection_efficiency: 1.0,
            gain: 1.0,
        },
        acquisition: Acquisition {
            rbw_hz: 100.0,
            span_hz: 100e3,
            n_avg: 20,
        },
        calibration: None,
        analysis: AnalysisConfig {
            fit_lo_offset_hz: -9e3,
            fit_hi_offset_hz: 45e3,
            exclusions_offset_hz: vec![[-4.5e3, -1.5e3]],
            band_half_width_hz: 2e3,
            band_sweep_offsets_hz: sweep_offsets(),
            classical_bound: 0.01,
            fit: FitOptions::default(),
        },
        probe_sweep: None,
        seeds: Seeds {
            master: 22,
            replicates: 1,
        },
    })
}

fn sweep_offsets() -> Vec<f64> {
    (-4..=4).map(|k| k as f64 * 500.0).collect()
}

fn fig3_gamma0_table() -> Vec<Gamma0Entry> {
    [(4.8, 0.84), (10.0, 0.866), (25.0, 0.943), (50.0, 1.07)]
        .into_iter()
        .map(|(t0_kelvin, gamma0_hz)| Gamma0Entry {
            t0_kelvin,
            gamma0_hz,
        })
        .collect()
}

/// (3,2) mode: four-temperature damping sweeps with tone calibration of a
/// tilted detector response, plus a probe-power sweep at 4.8 K.
pub fn fig3_32() -> CampaignConfig {
    let m = mode((3, 2), 2.637e6, 0.84, 18.0);
    CampaignConfig {
        schema_version: SCHEMA_VERSION,
        name: "fig3-32".into(),
        device: DeviceConfig {
            mode: m,
            spectator: None,
            gamma0_table: fig3_gamma0_table(),
        },
        cavity: cavity(2.7e6),
        beams: BeamConfig {
            probe_power_watts: 26e-6,
            damp_powers_watts: micro(&[3.2, 8.0, 14.0, 20.0, 28.0]),
            backaction: true,
            damping_photons_per_watt: Some(1.34e12),
            probe_photons_per_watt: None,
        },
        environments: vec![4.8, 10.0, 25.0, 50.0],
        noise: NoiseConfig {
            substrate_lines: Vec::new(),
            white_background: 1e-5,
            classical_bias: ClassicalBias::default(),
            het_response: HetResponse::tilted(0.01, m.freq_hz),
            detection_efficiency: 1.0,
            gain: 1.0,
        },
        acquisition: Acquisition {
            rbw_hz: 100.0,
            span_hz: 120e3,
            n_avg: 400,
        },
        calibration: Some(ToneConfig {
            offset_hz: 10e3,
            power: 1e4,
            span_hz: 2e3,
            rbw_hz: 100.0,
            n_avg: 400,
        }),
        analysis: AnalysisConfig {
            fit_lo_offset_hz: -55e3,
            fit_hi_offset_hz: 55e3,
            exclusions_offset_hz: Vec::new(),
            band_half_width_hz: 2e3,
            band_sweep_offsets_hz: sweep_offsets(),
            classical_bound: 0.01,
            fit: FitOptions::default(),
        },
        probe_sweep: Some(ProbeSweep {
            t0_kelvin: T_BASE,
            probe_powers_watts: micro(&[10.0, 18.0, 26.0, 34.0]),
        }),
        seeds: Seeds {
            master: 32,
            replicates: 1,
        },
    }
}

/// (5,2) mode of the same device: weaker coupling, same detector floor.
pub fn fig3_52() -> CampaignConfig {
    let mut cfg = fig3_32();
    cfg.name = "fig3-52".into();
    cfg.device = DeviceConfig {
        mode: mode((5, 2), 3.939e6, 1.0, 9.0),
        spectator: None,
        gamma0_table: Vec::new(),
    };
    cfg.noise.white_background *= 4.0;
    cfg.noise.het_response = HetResponse::tilted(0.01, 3.939e6);
    cfg.probe_sweep = None;
    cfg.seeds.master = 52;
    cfg
}

/// (3,2) mode at 4.8 K with the (2,3) mode 7.2 kHz above it, excluded from
/// the fit window.
pub fn fig3d_32() -> CampaignConfig {
    let mut cfg = fig3_32();
    cfg.name = "fig3d-32".into();
    let primary = cfg.device.mode;
    cfg.device.spectator = Some(mode((2, 3), primary.freq_hz + 7.2e3, 0.84, 4.5));
    cfg.environments = vec![T_BASE];
    cfg.beams.damp_powers_watts = micro(&[3.2, 8.0, 14.0, 20.0, 25.0]);
    cfg.analysis.fit_lo_offset_hz = -40e3;
    cfg.analysis.fit_hi_offset_hz = 40e3;
    cfg.analysis.exclusions_offset_hz = vec![[3e3, 15e3]];
    cfg.probe_sweep = None;
    cfg.seeds.master = 323;
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use raman_core::physics::{damped_state, Environment};

    #[test]
    fn every_preset_validates() {
        for name in NAMES {
            by_name(name).unwrap().validate().unwrap();
        }
        assert!(by_name("fig9").is_err());
    }

    #[test]
    fn fig2_strongest_point_hits_target() {
        let consts = PhysConsts::CODATA;
        for target in [2.0, 2.1] {
            let cfg = fig2_22(target).unwrap();
            let env = Environment::new(4.8).unwrap();
            let s = damped_state(
                &cfg.device.mode,
                &cfg.cavity,
                &env,
                cfg.strongest_damping(),
                cfg.beams.probe_power_watts,
                &cfg.couplings(&consts),
                &consts,
            )
            .unwrap();
            assert!((s.n_bar - target).abs() < 1e-9 * target, "{}", s.n_bar);
        }
    }

    #[test]
    fn spectator_sits_above_the_primary() {
        let cfg = fig3d_32();
        let d = cfg.device.spectator.unwrap().freq_hz - cfg.device.mode.freq_hz;
        assert!((d - 7.2e3).abs() < 1e-6);
    }
}
