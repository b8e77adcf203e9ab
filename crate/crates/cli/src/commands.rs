//! The verbs of the `raman` tool as library calls.

use std::path::{Path, PathBuf};

use raman_core::physics::{DampedState, PhysConsts};
use raman_core::spectrum::{SpectrumModel, ToneSpec};
use raman_core::thermometry::{band_sweep_relative_variation, HeterodyneCalibration};
use serde::{Deserialize, Serialize};

use crate::campaign::{
    run_campaign, summarize, CampaignSummary, RunOptions, SweepKey, SweepKind, SweepOutcome,
};
use crate::config::CampaignConfig;
use crate::error::{CliError, Result};
use crate::io::{
    ensure_dir, read_json, read_periodogram, write_json, write_periodogram, write_table,
};
use crate::ledger::{AnalysisRecord, BandSweepRecord, CalibrationRecord, Entry, Ledger, Record};
use crate::pipeline::{
    analyze_spectra, band_sensitivity, calibrate, exact_calibration, model_at, run_point,
    synthesize, synthesize_tones, truth_at, OperatingPoint, PointAnalysis, Realization, Spectra,
};
use crate::presets;
use crate::report;

pub const STOKES_FILE: &str = "stokes.csv";
pub const ANTISTOKES_FILE: &str = "antistokes.csv";
pub const CAL_STOKES_FILE: &str = "cal_stokes.csv";
pub const CAL_ANTISTOKES_FILE: &str = "cal_antistokes.csv";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const MODEL_FILE: &str = "model.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const RESULT_FILE: &str = "result.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BAND_FILE: &str = "band_sensitivity.csv";
pub const REPORT_DIR: &str = "report";

/// Resolve `--config` / `--preset` and apply a `--seed` override.
pub fn load_config(
    config: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
) -> Result<CampaignConfig> {
    let mut cfg = match (config, preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "--config/--preset",
                "give one of --config or --preset, not both",
            ))
        }
        (Some(path), None) => CampaignConfig::load(path)?,
        (None, Some(name)) => presets::by_name(name)?,
        (None, None) => {
            return Err(CliError::config(
                "--config/--preset",
                "one of --config or --preset is required",
            ))
        }
    };
    if let Some(s) = seed {
        cfg.seeds.master = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

/// Document written next to simulated spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub config_hash: String,
    pub config_name: String,
    pub operating_point: OperatingPoint,
    pub noiseless: bool,
    pub seed: u64,
    pub tone_seed: Option<u64>,
    pub truth: DampedState,
    pub tone: Option<ToneSpec>,
    pub model: SpectrumModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointSelection {
    /// Bath temperature; defaults to the first environment.
    pub t0_kelvin: Option<f64>,
    /// Index into the damping powers; defaults to the strongest.
    pub damp_index: Option<usize>,
}

fn select_point(
    cfg: &CampaignConfig,
    sel: PointSelection,
) -> Result<(SweepKey, usize, OperatingPoint)> {
    let t0 = sel.t0_kelvin.unwrap_or(cfg.environments[0]);
    let powers = &cfg.beams.damp_powers_watts;
    let k = sel.damp_index.unwrap_or(powers.len() - 1);
    if k >= powers.len() {
        return Err(CliError::config(
            "--damp-index",
            format!("must be below {}", powers.len()),
        ));
    }
    let index = cfg.environments.iter().position(|&t| t == t0).unwrap_or(0);
    let key = SweepKey {
        kind: SweepKind::Temperature,
        index,
        t0_kelvin: t0,
        p_probe_watts: cfg.beams.probe_power_watts,
        replicate: 0,
    };
    let op = OperatingPoint {
        t0_kelvin: t0,
        p_damp_watts: powers[k],
        p_probe_watts: cfg.beams.probe_power_watts,
    };
    Ok((key, k, op))
}

/// Write sideband spectra, tone spectra (or an exact calibration when
/// noiseless), the model sidecar and the configuration into `out`.
pub fn simulate(
    cfg: &CampaignConfig,
    sel: PointSelection,
    noiseless: bool,
    out: &Path,
) -> Result<ModelSidecar> {
    let consts = PhysConsts::CODATA;
    ensure_dir(out)?;
    let (key, k, op) = select_point(cfg, sel)?;
    let master = cfg.seeds.master;
    let seed = key.point_seed(master, k);
    let model = model_at(cfg, &op, &consts)?;
    let truth = truth_at(cfg, &op, &consts)?;
    let realization = if noiseless {
        Realization::Noiseless
    } else {
        Realization::Seeded(seed)
    };
    let spectra = synthesize(cfg, &model, realization)?;
    write_periodogram(&out.join(STOKES_FILE), &spectra.stokes)?;
    write_periodogram(&out.join(ANTISTOKES_FILE), &spectra.antistokes)?;

    let mut tone_seed = None;
    if cfg.calibration.is_some() {
        if noiseless {
            write_json(&out.join(CALIBRATION_FILE), &exact_calibration(cfg, &model))?;
        } else {
            let ts = key.tone_seed(master);
            if let Some((s, a)) = synthesize_tones(cfg, &model, ts)? {
                write_periodogram(&out.join(CAL_STOKES_FILE), &s)?;
                write_periodogram(&out.join(CAL_ANTISTOKES_FILE), &a)?;
                tone_seed = Some(ts);
            }
        }
    }

    let sidecar = ModelSidecar {
        config_hash: cfg.hash(),
        config_name: cfg.name.clone(),
        operating_point: op,
        noiseless,
        seed: if noiseless { 0 } else { seed },
        tone_seed,
        truth,
        tone: cfg.tone_spec(),
        model,
    };
    write_json(&out.join(MODEL_FILE), &sidecar)?;
    let cfg_path = out.join(CONFIG_FILE);
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| CliError::io(&cfg_path, e))?;
    Ok(sidecar)
}

fn config_for_spectra(cfg: Option<CampaignConfig>, spectra_dir: &Path) -> Result<CampaignConfig> {
    match cfg {
        Some(c) => Ok(c),
        None => {
            let path = spectra_dir.join(CONFIG_FILE);
            if !path.exists() {
                return Err(CliError::config(
                    "--config/--preset",
                    format!(
                        "no configuration given and none found at {}",
                        path.display()
                    ),
                ));
            }
            CampaignConfig::load(&path)
        }
    }
}

/// Calibration from tone spectra, else a stored calibration document, else
/// none.
pub fn find_calibration(spectra_dir: &Path) -> Result<Option<HeterodyneCalibration>> {
    let s = spectra_dir.join(CAL_STOKES_FILE);
    let a = spectra_dir.join(CAL_ANTISTOKES_FILE);
    if s.exists() && a.exists() {
        let tones = (read_periodogram(&s)?, read_periodogram(&a)?);
        return calibrate(Some(&tones)).map(Some);
    }
    let doc = spectra_dir.join(CALIBRATION_FILE);
    if doc.exists() {
        return read_json(&doc).map(Some);
    }
    Ok(None)
}

pub fn calibrate_files(
    cfg: Option<CampaignConfig>,
    spectra_dir: &Path,
    out: &Path,
) -> Result<HeterodyneCalibration> {
    let cfg = config_for_spectra(cfg, spectra_dir)?;
    let s = spectra_dir.join(CAL_STOKES_FILE);
    let a = spectra_dir.join(CAL_ANTISTOKES_FILE);
    if !(s.exists() && a.exists()) {
        return Err(CliError::Missing(format!(
            "calibration tone spectra {} and {}",
            s.display(),
            a.display()
        )));
    }
    let stokes = read_periodogram(&s)?;
    let tones = (stokes, read_periodogram(&a)?);
    let cal = calibrate(Some(&tones))?;
    ensure_dir(out)?;
    write_json(&out.join(CALIBRATION_FILE), &cal)?;
    let ledger = Ledger::open(out)?;
    let hash = ledger.store_config(&cfg)?;
    ledger.append(&[Record {
        config_hash: hash,
        command: "calibrate".into(),
        seed: tones.0.seed,
        entry: Entry::Calibration(CalibrationRecord {
            source: spectra_dir.display().to_string(),
            calibration: cal,
        }),
    }])?;
    Ok(cal)
}

/// Analyse `stokes.csv` / `antistokes.csv` in `spectra_dir`, write the
/// result document to `out` and append it to the ledger there.
pub fn analyze_files(
    cfg: Option<CampaignConfig>,
    spectra_dir: &Path,
    out: &Path,
    require_cal: bool,
) -> Result<AnalysisRecord> {
    let consts = PhysConsts::CODATA;
    let cfg = config_for_spectra(cfg, spectra_dir)?;
    let spectra = Spectra {
        stokes: read_periodogram(&spectra_dir.join(STOKES_FILE))?,
        antistokes: read_periodogram(&spectra_dir.join(ANTISTOKES_FILE))?,
    };
    let cal = match find_calibration(spectra_dir)? {
        Some(c) => c,
        None if require_cal => {
            return Err(CliError::Missing(format!(
            "--require-cal: no {CAL_STOKES_FILE}/{CAL_ANTISTOKES_FILE} or {CALIBRATION_FILE} in {}",
            spectra_dir.display()
        )))
        }
        None => HeterodyneCalibration::IDENTITY,
    };
    let sidecar_path = spectra_dir.join(MODEL_FILE);
    let sidecar: Option<ModelSidecar> = if sidecar_path.exists() {
        Some(read_json(&sidecar_path)?)
    } else {
        None
    };
    let op = sidecar.as_ref().map(|s| s.operating_point);
    let p_damp = op.map(|o| o.p_damp_watts).unwrap_or(0.0);
    let analysis = analyze_spectra(&cfg, &spectra, &cal, p_damp, &consts)?;
    let record = AnalysisRecord {
        source: spectra_dir.display().to_string(),
        operating_point: op,
        truth_n_bar: sidecar.map(|s| s.truth.n_bar),
        analysis,
    };
    ensure_dir(out)?;
    write_json(&out.join(RESULT_FILE), &record)?;
    let ledger = Ledger::open(out)?;
    let hash = ledger.store_config(&cfg)?;
    ledger.append(&[Record {
        config_hash: hash,
        command: "analyze".into(),
        seed: spectra.stokes.seed,
        entry: Entry::Analysis(record.clone()),
    }])?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    pub config_hash: String,
    pub outcomes: Vec<SweepOutcome>,
    pub summary: CampaignSummary,
}

impl CampaignOutput {
    pub fn failed(&self) -> bool {
        self.summary.failed_points > 0 || self.summary.failed_sweeps > 0
    }
}

/// Run every sweep, append points, sweeps and the summary to the ledger in
/// `out`, and write the summary and report tables.
pub fn campaign(cfg: &CampaignConfig, opts: RunOptions, out: &Path) -> Result<CampaignOutput> {
    let consts = PhysConsts::CODATA;
    let ledger = Ledger::open(out)?;
    let hash = ledger.store_config(cfg)?;
    let outcomes = run_campaign(cfg, opts, &consts)?;
    let summary = summarize(&outcomes);

    let master = cfg.seeds.master;
    let record = |entry| Record {
        config_hash: hash.clone(),
        command: "campaign".into(),
        seed: master,
        entry,
    };
    let mut records = Vec::new();
    for o in &outcomes {
        records.extend(o.points.iter().map(|p| record(Entry::Point(p.clone()))));
        records.push(record(Entry::Sweep(o.sweep.clone())));
    }
    records.push(record(Entry::Summary(summary.clone())));
    ledger.append(&records)?;
    write_json(&out.join(SUMMARY_FILE), &summary)?;

    let refs: Vec<&Record> = records.iter().collect();
    report::write(&report::build(&refs), &out.join(REPORT_DIR))?;
    Ok(CampaignOutput {
        config_hash: hash,
        outcomes,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BandRow {
    offset_hz: f64,
    band_center_hz: f64,
    ratio: f64,
    ratio_sigma: f64,
    n_bar: Option<f64>,
    t_eff_kelvin: Option<f64>,
    t_eff_sigma_kelvin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSensitivityOutput {
    pub record: BandSweepRecord,
    pub analysis: PointAnalysis,
}

/// Band-ratio temperature against band-centre offset at one point (default:
/// strongest damping, first environment).
pub fn band_sensitivity_cmd(
    cfg: &CampaignConfig,
    sel: PointSelection,
    noiseless: bool,
    out: &Path,
) -> Result<BandSensitivityOutput> {
    let consts = PhysConsts::CODATA;
    let (key, k, op) = select_point(cfg, sel)?;
    let seed = key.point_seed(cfg.seeds.master, k);
    let realization = if noiseless {
        Realization::Noiseless
    } else {
        Realization::Seeded(seed)
    };
    let (spectra, analysis) = run_point(cfg, &op, realization, &consts)?;
    let rows = band_sensitivity(cfg, &spectra, &analysis, &consts)?;
    let zero = rows.iter().find(|r| r.offset_hz == 0.0);
    let relative_sigma = zero.and_then(|r| Some(r.t_eff_sigma? / r.t_eff_kelvin?));
    let record = BandSweepRecord {
        operating_point: op,
        noiseless,
        half_width_hz: cfg.analysis.band_half_width_hz,
        relative_variation: band_sweep_relative_variation(&rows),
        relative_sigma,
        rows,
    };

    let ledger = Ledger::open(out)?;
    let hash = ledger.store_config(cfg)?;
    let table: Vec<BandRow> = record
        .rows
        .iter()
        .map(|r| BandRow {
            offset_hz: r.offset_hz,
            band_center_hz: analysis.fit.center_hz + r.offset_hz,
            ratio: r.ratio.value,
            ratio_sigma: r.ratio.sigma(),
            n_bar: r.n_bar,
            t_eff_kelvin: r.t_eff_kelvin,
            t_eff_sigma_kelvin: r.t_eff_sigma,
        })
        .collect();
    write_table(&out.join(BAND_FILE), &table)?;
    ledger.append(&[Record {
        config_hash: hash,
        command: "band-sensitivity".into(),
        seed: if noiseless { 0 } else { seed },
        entry: Entry::BandSweep(record.clone()),
    }])?;
    Ok(BandSensitivityOutput { record, analysis })
}

/// Tables from the ledger in `ledger_dir`, written to `out`.
pub fn report_cmd(
    ledger_dir: &Path,
    out: &Path,
    hash_prefix: Option<&str>,
) -> Result<(report::Report, Vec<PathBuf>)> {
    let rep = report::report(ledger_dir, out, hash_prefix)?;
    let paths = [
        report::PEAKS_FILE,
        report::RATIO_FILE,
        report::TEMPERATURE_FILE,
    ]
    .iter()
    .map(|f| out.join(f))
    .collect();
    Ok((rep, paths))
}
