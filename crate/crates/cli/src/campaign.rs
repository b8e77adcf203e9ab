//! Damping sweeps per bath temperature, probe-power sweeps and their
//! extrapolations.

use raman_core::physics::{thermal_occupation, DampedState, PhysConsts};
use raman_core::rng::derive_seed;
use raman_core::thermometry::{
    backaction_correction, extrapolate_t0, BackactionCorrection, Extrapolation,
    HeterodyneCalibration, ThermometryResult,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CampaignConfig;
use crate::error::{Context, Result};
use crate::pipeline::{
    analyze_spectra, calibrate, exact_calibration, model_at, synthesize, synthesize_tones,
    truth_at, OperatingPoint, PointAnalysis, Realization, TONE_SLOT,
};

/// Seed-path slot that separates probe sweeps from bath-temperature sweeps.
const PROBE_SLOT: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Temperature,
    ProbePower,
}

/// Identifies one damping sweep of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepKey {
    pub kind: SweepKind,
    /// Index into `environments`, or into the probe powers for probe sweeps.
    pub index: usize,
    pub t0_kelvin: f64,
    pub p_probe_watts: f64,
    pub replicate: u32,
}

impl SweepKey {
    fn seed(&self, master: u64, slot: u64) -> u64 {
        let path = [self.index as u64, slot, self.replicate as u64];
        match self.kind {
            SweepKind::Temperature => derive_seed(master, &path),
            SweepKind::ProbePower => derive_seed(derive_seed(master, &[PROBE_SLOT]), &path),
        }
    }

    pub fn point_seed(&self, master: u64, power_index: usize) -> u64 {
        self.seed(master, power_index as u64)
    }

    pub fn tone_seed(&self, master: u64) -> u64 {
        self.seed(master, TONE_SLOT)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub sweep: SweepKey,
    pub power_index: usize,
    pub p_damp_watts: f64,
    pub seed: u64,
    /// Configured mode state; absent when the operating point is unphysical.
    pub truth: Option<DampedState>,
    pub analysis: Option<PointAnalysis>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: SweepKey,
    pub gamma0_hz: f64,
    pub tone_seed: u64,
    pub calibration: Option<HeterodyneCalibration>,
    /// Configured bath occupation.
    pub truth_n_th: f64,
    pub extrapolation: Option<Extrapolation>,
    pub backaction: Option<BackactionCorrection>,
    /// Final estimate, backaction-corrected when configured.
    pub result: Option<ThermometryResult>,
    pub points_used: usize,
    pub points_failed: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub sweep: SweepRecord,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub serial: bool,
    pub noiseless: bool,
}

pub fn sweep_keys(cfg: &CampaignConfig) -> Vec<SweepKey> {
    let mut keys = Vec::new();
    for replicate in 0..cfg.seeds.replicates {
        for (index, &t0) in cfg.environments.iter().enumerate() {
            keys.push(SweepKey {
                kind: SweepKind::Temperature,
                index,
                t0_kelvin: t0,
                p_probe_watts: cfg.beams.probe_power_watts,
                replicate,
            });
        }
        if let Some(ps) = &cfg.probe_sweep {
            for (index, &p) in ps.probe_powers_watts.iter().enumerate() {
                keys.push(SweepKey {
                    kind: SweepKind::ProbePower,
                    index,
                    t0_kelvin: ps.t0_kelvin,
                    p_probe_watts: p,
                    replicate,
                });
            }
        }
    }
    keys
}

fn realization(opts: RunOptions, seed: u64) -> Realization {
    if opts.noiseless {
        Realization::Noiseless
    } else {
        Realization::Seeded(seed)
    }
}

/// Run one damping sweep. Point failures are recorded and skipped; a sweep
/// failure (calibration or extrapolation) is recorded in the sweep record.
pub fn run_sweep(
    cfg: &CampaignConfig,
    key: &SweepKey,
    opts: RunOptions,
    consts: &PhysConsts,
) -> Result<SweepOutcome> {
    let master = cfg.seeds.master;
    let ops: Vec<OperatingPoint> = cfg
        .beams
        .damp_powers_watts
        .iter()
        .map(|&p| OperatingPoint {
            t0_kelvin: key.t0_kelvin,
            p_damp_watts: p,
            p_probe_watts: key.p_probe_watts,
        })
        .collect();
    let gamma0_hz = cfg.gamma0_at(key.t0_kelvin);
    let truth_n_th = thermal_occupation(cfg.device.mode.freq_hz, key.t0_kelvin, consts)
        .context(|| "bath occupation".into())?;
    let tone_seed = key.tone_seed(master);
    let mut sweep = SweepRecord {
        sweep: *key,
        gamma0_hz,
        tone_seed,
        calibration: None,
        truth_n_th,
        extrapolation: None,
        backaction: None,
        result: None,
        points_used: 0,
        points_failed: 0,
        error: None,
    };

    // One calibration per sweep, taken with the weakest damping applied.
    let cal = model_at(cfg, &ops[0], consts).and_then(|m| {
        if opts.noiseless {
            Ok(exact_calibration(cfg, &m))
        } else {
            synthesize_tones(cfg, &m, tone_seed).and_then(|t| calibrate(t.as_ref()))
        }
    });
    let cal = match cal {
        Ok(c) => c,
        Err(e) => {
            sweep.error = Some(e.to_string());
            sweep.points_failed = ops.len();
            return Ok(SweepOutcome {
                sweep,
                points: Vec::new(),
            });
        }
    };
    sweep.calibration = Some(cal);

    let mut points = Vec::with_capacity(ops.len());
    for (k, op) in ops.iter().enumerate() {
        let seed = key.point_seed(master, k);
        let truth = truth_at(cfg, op, consts);
        let analysis = model_at(cfg, op, consts)
            .and_then(|m| synthesize(cfg, &m, realization(opts, seed)))
            .and_then(|s| analyze_spectra(cfg, &s, &cal, op.p_damp_watts, consts));
        let (analysis, error) = match analysis {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.to_string())),
        };
        points.push(PointRecord {
            sweep: *key,
            power_index: k,
            p_damp_watts: op.p_damp_watts,
            seed,
            truth: truth.ok(),
            analysis,
            error,
        });
    }

    let ratio_points: Vec<_> = points
        .iter()
        .filter_map(|p| p.analysis.as_ref().map(|a| a.ratio_point))
        .collect();
    sweep.points_used = ratio_points.len();
    sweep.points_failed = points.len() - ratio_points.len();

    let freq = cfg.device.mode.freq_hz;
    let estimate = extrapolate_t0(
        &ratio_points,
        gamma0_hz,
        freq,
        &cal,
        cfg.analysis.classical_bound,
        consts,
    )
    .context(|| "temperature extrapolation".into())
    .and_then(|ex| {
        let mut result = ex.result.clone();
        let correction = if cfg.beams.backaction {
            let mode = cfg.device_at(key.t0_kelvin)?.mode;
            let c = backaction_correction(
                ex.n_th_raw,
                key.p_probe_watts,
                &mode,
                &cfg.cavity,
                &cfg.couplings(consts).probe,
                consts,
            )
            .context(|| "backaction correction".into())?;
            result.apply_backaction(&c);
            Some(c)
        } else {
            None
        };
        Ok((ex, correction, result))
    });
    match estimate {
        Ok((ex, correction, result)) => {
            sweep.extrapolation = Some(ex);
            sweep.backaction = correction;
            sweep.result = Some(result);
        }
        Err(e) => sweep.error = Some(e.to_string()),
    }
    Ok(SweepOutcome { sweep, points })
}

/// Run every sweep of a campaign. Parallel and serial runs give identical
/// outcomes in identical order.
pub fn run_campaign(
    cfg: &CampaignConfig,
    opts: RunOptions,
    consts: &PhysConsts,
) -> Result<Vec<SweepOutcome>> {
    let keys = sweep_keys(cfg);
    if opts.serial {
        keys.iter()
            .map(|k| run_sweep(cfg, k, opts, consts))
            .collect()
    } else {
        keys.par_iter()
            .map(|k| run_sweep(cfg, k, opts, consts))
            .collect()
    }
}

/// Extracted against configured bath temperature, averaged over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRow {
    pub kind: SweepKind,
    pub t0_set_kelvin: f64,
    pub p_probe_watts: f64,
    pub replicates: usize,
    pub t0_extracted_kelvin: Option<f64>,
    /// Mean statistical σ of a single sweep.
    pub t0_sigma_kelvin: Option<f64>,
    pub backaction_kelvin: Option<f64>,
    pub relative_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub rows: Vec<TemperatureRow>,
    /// Mean `|T_extracted - T0| / T0` over bath-temperature sweeps.
    pub mean_relative_deviation: Option<f64>,
    pub total_points: usize,
    pub failed_points: usize,
    pub failed_sweeps: usize,
}

pub fn summarize(outcomes: &[SweepOutcome]) -> CampaignSummary {
    let mut rows: Vec<TemperatureRow> = Vec::new();
    let mut groups: Vec<(SweepKind, usize, Vec<&SweepRecord>)> = Vec::new();
    for o in outcomes {
        let k = o.sweep.sweep;
        match groups.iter_mut().find(|g| g.0 == k.kind && g.1 == k.index) {
            Some(g) => g.2.push(&o.sweep),
            None => groups.push((k.kind, k.index, vec![&o.sweep])),
        }
    }
    for (kind, _, sweeps) in &groups {
        let first = sweeps[0].sweep;
        let ok: Vec<&ThermometryResult> = sweeps.iter().filter_map(|s| s.result.as_ref()).collect();
        let mean = |f: &dyn Fn(&SweepRecord) -> Option<f64>| {
            let v: Vec<f64> = sweeps.iter().filter_map(|s| f(s)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let t0 = mean(&|s| s.result.as_ref().and_then(|r| r.t0_kelvin));
        rows.push(TemperatureRow {
            kind: *kind,
            t0_set_kelvin: first.t0_kelvin,
            p_probe_watts: first.p_probe_watts,
            replicates: ok.len(),
            t0_extracted_kelvin: t0,
            t0_sigma_kelvin: mean(&|s| s.result.as_ref().map(|r| r.stat_sigma)),
            backaction_kelvin: mean(&|s| s.backaction.map(|b| b.kelvin)),
            relative_deviation: t0.map(|t| (t - first.t0_kelvin).abs() / first.t0_kelvin),
        });
    }
    let devs: Vec<f64> = rows
        .iter()
        .filter(|r| r.kind == SweepKind::Temperature)
        .filter_map(|r| r.relative_deviation)
        .collect();
    CampaignSummary {
        mean_relative_deviation: (!devs.is_empty())
            .then(|| devs.iter().sum::<f64>() / devs.len() as f64),
        rows,
        total_points: outcomes
            .iter()
            .map(|o| o.sweep.points_used + o.sweep.points_failed)
            .sum(),
        failed_points: outcomes.iter().map(|o| o.sweep.points_failed).sum(),
        failed_sweeps: outcomes.iter().filter(|o| o.sweep.result.is_none()).count(),
    }
}
