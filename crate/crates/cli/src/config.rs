//! Campaign configuration: a versioned TOML document.

use std::path::Path;

use raman_core::fit::{FitOptions, FitWindow};
use raman_core::physics::{
    BeamCoupling, CavityParams, Couplings, Environment, MechMode, PhysConsts,
};
use raman_core::spectrum::{Device, NoiseConfig, ToneSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub name: String,
    pub device: DeviceConfig,
    pub cavity: CavityParams,
    pub beams: BeamConfig,
    /// Bath temperatures T0 in kelvin, one sweep each.
    pub environments: Vec<f64>,
    pub noise: NoiseConfig,
    pub acquisition: Acquisition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<ToneConfig>,
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_sweep: Option<ProbeSweep>,
    pub seeds: Seeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub mode: MechMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectator: Option<MechMode>,
    /// Intrinsic linewidth per bath temperature. Temperatures between entries
    /// are interpolated linearly; outside the table the nearest entry is used.
    /// Empty means `mode.gamma0_hz` everywhere.
    #[serde(default)]
    pub gamma0_table: Vec<Gamma0Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gamma0Entry {
    pub t0_kelvin: f64,
    pub gamma0_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub probe_power_watts: f64,
    /// Strictly increasing.
    pub damp_powers_watts: Vec<f64>,
    pub backaction: bool,
    /// Intracavity photons per watt of damping power; defaults to the
    /// resonant-drive conversion of the cavity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_photons_per_watt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_photons_per_watt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acquisition {
    pub rbw_hz: f64,
    pub span_hz: f64,
    pub n_avg: u32,
}

/// Calibration tones at `±(ν_m + offset_hz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneConfig {
    pub offset_hz: f64,
    pub power: f64,
    pub span_hz: f64,
    pub rbw_hz: f64,
    pub n_avg: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Fit window on the anti-Stokes side as offsets from `ν_m`; the Stokes
    /// side uses the mirror image.
    pub fit_lo_offset_hz: f64,
    pub fit_hi_offset_hz: f64,
    #[serde(default)]
    pub exclusions_offset_hz: Vec<[f64; 2]>,
    pub band_half_width_hz: f64,
    pub band_sweep_offsets_hz: Vec<f64>,
    /// Largest fractional classical-noise bias on either sideband.
    pub classical_bound: f64,
    #[serde(default)]
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSweep {
    pub t0_kelvin: f64,
    pub probe_powers_watts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    pub replicates: u32,
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, message()))
    }
}

fn core_check(path: &str, r: raman_core::Result<()>) -> Result<()> {
    r.map_err(|e| CliError::config(path, e.to_string()))
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CampaignConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "document".into());
            CliError::config(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config { path: p, message } => {
                CliError::config(format!("{}: {p}", path.display()), message)
            }
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON serialisation, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.schema_version == SCHEMA_VERSION,
            "schema_version",
            || format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
        )?;
        core_check("device.mode", self.device.mode.validate())?;
        if let Some(s) = &self.device.spectator {
            core_check("device.spectator", s.validate())?;
        }
        for (i, e) in self.device.gamma0_table.iter().enumerate() {
            let p = format!("device.gamma0_table[{i}]");
            check(e.t0_kelvin > 0.0, &p, || {
                "t0_kelvin must be positive".into()
            })?;
            core_check(&p, self.device.mode.with_gamma0(e.gamma0_hz).map(|_| ()))?;
        }
        for w in self.device.gamma0_table.windows(2) {
            check(
                w[1].t0_kelvin > w[0].t0_kelvin,
                "device.gamma0_table",
                || "temperatures must be strictly increasing".into(),
            )?;
        }
        core_check("cavity", self.cavity.validate())?;

        let b = &self.beams;
        check(
            b.probe_power_watts >= 0.0,
            "beams.probe_power_watts",
            || "must be non-negative".into(),
        )?;
        check(
            !b.damp_powers_watts.is_empty(),
            "beams.damp_powers_watts",
            || "at least one damping power is required".into(),
        )?;
        for (i, p) in b.damp_powers_watts.iter().enumerate() {
            check(
                *p >= 0.0 && p.is_finite(),
                &format!("beams.damp_powers_watts[{i}]"),
                || format!("must be finite and non-negative, got {p}"),
            )?;
        }
        for (i, w) in b.damp_powers_watts.windows(2).enumerate() {
            check(
                w[1] > w[0],
                &format!("beams.damp_powers_watts[{}]", i + 1),
                || "damping powers must be strictly increasing".into(),
            )?;
        }
        for (name, v) in [
            ("beams.damping_photons_per_watt", b.damping_photons_per_watt),
            ("beams.probe_photons_per_watt", b.probe_photons_per_watt),
        ] {
            if let Some(v) = v {
                core_check(name, BeamCoupling::new(v).map(|_| ()))?;
            }
        }

        check(!self.environments.is_empty(), "environments", || {
            "at least one bath temperature is required".into()
        })?;
        for (i, t) in self.environments.iter().enumerate() {
            core_check(
                &format!("environments[{i}]"),
                Environment::new(*t).map(|_| ()),
            )?;
        }

        let n = &self.noise;
        check(n.gain > 0.0, "noise.gain", || "must be positive".into())?;
        check(
            n.detection_efficiency > 0.0,
            "noise.detection_efficiency",
            || "must be positive".into(),
        )?;
        check(n.white_background >= 0.0, "noise.white_background", || {
            "must be non-negative".into()
        })?;
        for (i, l) in n.substrate_lines.iter().enumerate() {
            check(
                l.freq_hz > 0.0 && l.gamma_hz > 0.0 && l.area_quanta >= 0.0,
                &format!("noise.substrate_lines[{i}]"),
                || "needs positive frequency and width and non-negative area".into(),
            )?;
        }

        let a = &self.acquisition;
        check(a.rbw_hz > 0.0, "acquisition.rbw_hz", || {
            "must be positive".into()
        })?;
        check(a.span_hz >= 4.0 * a.rbw_hz, "acquisition.span_hz", || {
            "must cover at least four bins".into()
        })?;
        check(a.n_avg >= 1, "acquisition.n_avg", || {
            "must be at least 1".into()
        })?;

        if let Some(t) = &self.calibration {
            check(
                t.power > 0.0 && t.rbw_hz > 0.0 && t.span_hz >= 4.0 * t.rbw_hz && t.n_avg >= 1,
                "calibration",
                || "tone needs positive power, rbw, span >= 4 rbw and n_avg >= 1".into(),
            )?;
            check(
                self.device.mode.freq_hz + t.offset_hz > 0.0,
                "calibration.offset_hz",
                || "tone frequency must be positive".into(),
            )?;
        }

        let an = &self.analysis;
        check(
            an.fit_lo_offset_hz < an.fit_hi_offset_hz,
            "analysis.fit_lo_offset_hz",
            || "fit window needs lo < hi".into(),
        )?;
        let half = 0.5 * a.span_hz;
        check(
            an.fit_lo_offset_hz >= -half && an.fit_hi_offset_hz <= half,
            "analysis.fit_hi_offset_hz",
            || format!("fit window must lie inside the acquired ±{half} Hz"),
        )?;
        for (i, [lo, hi]) in an.exclusions_offset_hz.iter().enumerate() {
            check(
                lo < hi && *lo >= an.fit_lo_offset_hz && *hi <= an.fit_hi_offset_hz,
                &format!("analysis.exclusions_offset_hz[{i}]"),
                || "exclusion must be a non-empty range inside the fit window".into(),
            )?;
        }
        check(
            an.band_half_width_hz > 0.0,
            "analysis.band_half_width_hz",
            || "must be positive".into(),
        )?;
        check(
            (0.0..0.5).contains(&an.classical_bound),
            "analysis.classical_bound",
            || "must be in [0, 0.5)".into(),
        )?;
        check(an.fit.max_iters > 0, "analysis.fit.max_iters", || {
            "must be positive".into()
        })?;

        if let Some(ps) = &self.probe_sweep {
            core_check(
                "probe_sweep.t0_kelvin",
                Environment::new(ps.t0_kelvin).map(|_| ()),
            )?;
            check(
                !ps.probe_powers_watts.is_empty(),
                "probe_sweep.probe_powers_watts",
                || "at least one probe power is required".into(),
            )?;
            for (i, p) in ps.probe_powers_watts.iter().enumerate() {
                check(
                    *p > 0.0,
                    &format!("probe_sweep.probe_powers_watts[{i}]"),
                    || "must be positive".into(),
                )?;
            }
        }
        // TOML integers are signed 64-bit.
        check(self.seeds.master <= i64::MAX as u64, "seeds.master", || {
            format!("must not exceed {}", i64::MAX)
        })?;
        check(self.seeds.replicates >= 1, "seeds.replicates", || {
            "must be at least 1".into()
        })?;
        Ok(())
    }

    /// Intrinsic linewidth at bath temperature `t0`.
    pub fn gamma0_at(&self, t0: f64) -> f64 {
        let table = &self.device.gamma0_table;
        match table.len() {
            0 => self.device.mode.gamma0_hz,
            _ if t0 <= table[0].t0_kelvin => table[0].gamma0_hz,
            _ if t0 >= table[table.len() - 1].t0_kelvin => table[table.len() - 1].gamma0_hz,
            _ => {
                let k = table.iter().position(|e| e.t0_kelvin >= t0).unwrap();
                let (a, b) = (table[k - 1], table[k]);
                let f = (t0 - a.t0_kelvin) / (b.t0_kelvin - a.t0_kelvin);
                a.gamma0_hz + f * (b.gamma0_hz - a.gamma0_hz)
            }
        }
    }

    /// Device with intrinsic linewidths set for bath temperature `t0`. The
    /// spectator keeps its ratio to the primary linewidth.
    pub fn device_at(&self, t0: f64) -> Result<Device> {
        let g0 = self.gamma0_at(t0);
        let scale = g0 / self.device.mode.gamma0_hz;
        let mode = self
            .device
            .mode
            .with_gamma0(g0)
            .map_err(|e| CliError::config("device.gamma0_table", e.to_string()))?;
        let spectator = match self.device.spectator {
            Some(s) => Some(
                s.with_gamma0(s.gamma0_hz * scale)
                    .map_err(|e| CliError::config("device.spectator", e.to_string()))?,
            ),
            None => None,
        };
        Ok(Device { mode, spectator })
    }

    pub fn couplings(&self, consts: &PhysConsts) -> Couplings {
        let resonant = BeamCoupling::resonant(&self.cavity, consts);
        let pick = |v: Option<f64>| {
            v.map(|p| BeamCoupling {
                photons_per_watt: p,
            })
            .unwrap_or(resonant)
        };
        Couplings {
            damping: pick(self.beams.damping_photons_per_watt),
            probe: pick(self.beams.probe_photons_per_watt),
            backaction: self.beams.backaction,
        }
    }

    /// Anti-Stokes-side fit window in absolute frequency.
    pub fn fit_window(&self) -> Result<FitWindow> {
        let f = self.device.mode.freq_hz;
        let an = &self.analysis;
        let mut w = FitWindow::new(f + an.fit_lo_offset_hz, f + an.fit_hi_offset_hz)
            .map_err(|e| CliError::config("analysis", e.to_string()))?;
        for [lo, hi] in &an.exclusions_offset_hz {
            w = w
                .exclude(f + lo, f + hi)
                .map_err(|e| CliError::config("analysis.exclusions_offset_hz", e.to_string()))?;
        }
        Ok(w)
    }

    pub fn tone_spec(&self) -> Option<ToneSpec> {
        self.calibration.map(|t| ToneSpec {
            freq_hz: self.device.mode.freq_hz + t.offset_hz,
            power: t.power,
            span_hz: t.span_hz,
            rbw_hz: t.rbw_hz,
            n_avg: t.n_avg,
        })
    }

    pub fn strongest_damping(&self) -> f64 {
        *self
            .beams
            .damp_powers_watts
            .last()
            .expect("validated non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in presets::NAMES {
            let cfg = presets::by_name(name).unwrap();
            let text = cfg.to_toml();
            let back = CampaignConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.to_toml(), text);
            assert_eq!(back.hash(), cfg.hash());
        }
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = presets::by_name("fig3-32").unwrap();
        cfg.beams.damp_powers_watts = vec![1e-6, 3e-6, 2e-6];
        match cfg.validate() {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "beams.damp_powers_watts[2]"),
            other => panic!("{other:?}"),
        }
        let mut cfg = presets::by_name("fig3-32").unwrap();
        cfg.schema_version = 9;
        assert!(
            matches!(cfg.validate(), Err(CliError::Config { path, .. }) if path == "schema_version")
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = presets::by_name("fig2-22").unwrap().to_toml();
        let bad = text.replacen(
            "schema_version = 1",
            "schema_version = 1\ncolour = \"red\"",
            1,
        );
        assert!(matches!(
            CampaignConfig::from_toml(&bad),
            Err(CliError::Config { .. })
        ));
    }

    #[test]
    fn gamma0_table_interpolates() {
        let cfg = presets::by_name("fig3-32").unwrap();
        assert_eq!(cfg.gamma0_at(4.8), 0.84);
        assert_eq!(cfg.gamma0_at(1.0), 0.84);
        assert_eq!(cfg.gamma0_at(80.0), 1.07);
        let mid = cfg.gamma0_at(27.4);
        assert!(mid > cfg.gamma0_at(25.0) && mid < 1.07);
    }

    #[test]
    fn hash_tracks_content() {
        let a = presets::by_name("fig3-32").unwrap();
        let mut b = a.clone();
        b.seeds.master += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
