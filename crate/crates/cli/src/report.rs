//! Plot-ready tables rebuilt from the ledger.

use std::path::{Path, PathBuf};

use raman_core::thermometry::SystematicKind;
use serde::Serialize;

use crate::campaign::SweepKind;
use crate::error::{CliError, Result};
use crate::io::{ensure_dir, write_table};
use crate::ledger::{Entry, Ledger, Record};
use crate::pipeline::PointAnalysis;

pub const PEAKS_FILE: &str = "sideband_peaks.csv";
pub const RATIO_FILE: &str = "ratio_vs_power.csv";
pub const TEMPERATURE_FILE: &str = "temperature_vs_temperature.csv";

/// Peak heights against damping power, raw and in quanta: one quantum is the
/// Stokes excess `A_s - A_as`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakRow {
    pub config_hash: String,
    pub t0_kelvin: Option<f64>,
    pub p_probe_uw: Option<f64>,
    pub p_damp_uw: Option<f64>,
    pub replicate: Option<u32>,
    pub stokes_peak: f64,
    pub stokes_sigma: f64,
    pub antistokes_peak: f64,
    pub antistokes_sigma: f64,
    pub stokes_quanta: f64,
    pub antistokes_quanta: f64,
    pub n_bar_configured: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub config_hash: String,
    pub sweep: Option<SweepKind>,
    pub t0_kelvin: Option<f64>,
    pub p_probe_uw: Option<f64>,
    pub replicate: Option<u32>,
    pub p_damp_uw: Option<f64>,
    pub r_sa: f64,
    pub r_sigma: f64,
    pub gamma_m_hz: f64,
    pub gamma_sigma_hz: f64,
    pub n_bar: Option<f64>,
    pub n_bar_sigma: Option<f64>,
    pub n_bar_configured: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureRow {
    pub config_hash: String,
    pub sweep: SweepKind,
    pub t0_set_kelvin: f64,
    pub p_probe_uw: f64,
    pub replicate: u32,
    pub t0_kelvin: Option<f64>,
    pub t0_sigma_kelvin: Option<f64>,
    pub t0_raw_kelvin: Option<f64>,
    pub backaction_kelvin: Option<f64>,
    pub n_th: Option<f64>,
    pub n_th_sigma: Option<f64>,
    pub intercept_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub peaks: Vec<PeakRow>,
    pub ratios: Vec<RatioRow>,
    pub temperatures: Vec<TemperatureRow>,
}

/// Watts to microwatts, rounded to the picowatt.
pub fn microwatts(w: f64) -> f64 {
    (w * 1e12).round() / 1e6
}

fn peak_row(hash: &str, a: &PointAnalysis) -> PeakRow {
    let f = &a.fit;
    let one = f.stokes_amplitude - f.antistokes_amplitude;
    PeakRow {
        config_hash: hash.into(),
        t0_kelvin: None,
        p_probe_uw: None,
        p_damp_uw: None,
        replicate: None,
        stokes_peak: f.stokes_amplitude,
        stokes_sigma: f.sigma(0),
        antistokes_peak: f.antistokes_amplitude,
        antistokes_sigma: f.sigma(1),
        stokes_quanta: f.stokes_amplitude / one,
        antistokes_quanta: f.antistokes_amplitude / one,
        n_bar_configured: None,
    }
}

fn ratio_row(hash: &str, a: &PointAnalysis) -> RatioRow {
    let p = &a.ratio_point;
    RatioRow {
        config_hash: hash.into(),
        sweep: None,
        t0_kelvin: None,
        p_probe_uw: None,
        replicate: None,
        p_damp_uw: Some(microwatts(p.p_damp_watts)),
        r_sa: p.r_sa,
        r_sigma: p.r_sigma,
        gamma_m_hz: p.gamma_m_hz,
        gamma_sigma_hz: p.gamma_sigma,
        n_bar: a.result.n_bar,
        n_bar_sigma: a.result.n_bar_sigma,
        n_bar_configured: None,
    }
}

/// Records whose configuration hash starts with `hash_prefix`.
pub fn select<'a>(records: &'a [Record], hash_prefix: Option<&str>) -> Vec<&'a Record> {
    records
        .iter()
        .filter(|r| hash_prefix.is_none_or(|h| r.config_hash.starts_with(h)))
        .collect()
}

pub fn build(records: &[&Record]) -> Report {
    let mut out = Report::default();
    for r in records {
        let hash = r.config_hash.as_str();
        match &r.entry {
            Entry::Point(p) => {
                let Some(a) = &p.analysis else { continue };
                let s = &p.sweep;
                let mut peak = peak_row(hash, a);
                peak.t0_kelvin = Some(s.t0_kelvin);
                peak.p_probe_uw = Some(microwatts(s.p_probe_watts));
                peak.p_damp_uw = Some(microwatts(p.p_damp_watts));
                peak.replicate = Some(s.replicate);
                peak.n_bar_configured = p.truth.map(|t| t.n_bar);
                out.peaks.push(peak);
                let mut ratio = ratio_row(hash, a);
                ratio.sweep = Some(s.kind);
                ratio.t0_kelvin = Some(s.t0_kelvin);
                ratio.p_probe_uw = Some(microwatts(s.p_probe_watts));
                ratio.replicate = Some(s.replicate);
                ratio.n_bar_configured = p.truth.map(|t| t.n_bar);
                out.ratios.push(ratio);
            }
            Entry::Analysis(a) => {
                let mut peak = peak_row(hash, &a.analysis);
                let mut ratio = ratio_row(hash, &a.analysis);
                if let Some(op) = &a.operating_point {
                    peak.t0_kelvin = Some(op.t0_kelvin);
                    peak.p_probe_uw = Some(microwatts(op.p_probe_watts));
                    peak.p_damp_uw = Some(microwatts(op.p_damp_watts));
                    ratio.t0_kelvin = peak.t0_kelvin;
                    ratio.p_probe_uw = peak.p_probe_uw;
                } else {
                    ratio.p_damp_uw = None;
                }
                peak.n_bar_configured = a.truth_n_bar;
                ratio.n_bar_configured = a.truth_n_bar;
                out.peaks.push(peak);
                out.ratios.push(ratio);
            }
            Entry::Sweep(s) => {
                let k = &s.sweep;
                let result = s.result.as_ref();
                out.temperatures.push(TemperatureRow {
                    config_hash: hash.into(),
                    sweep: k.kind,
                    t0_set_kelvin: k.t0_kelvin,
                    p_probe_uw: microwatts(k.p_probe_watts),
                    replicate: k.replicate,
                    t0_kelvin: result.and_then(|r| r.t0_kelvin),
                    t0_sigma_kelvin: result.map(|r| r.stat_sigma),
                    t0_raw_kelvin: s.extrapolation.as_ref().map(|e| e.t0_raw_kelvin),
                    backaction_kelvin: s.backaction.map(|b| b.kelvin),
                    n_th: result.and_then(|r| r.n_bar),
                    n_th_sigma: result.and_then(|r| r.n_bar_sigma),
                    intercept_residual: result
                        .map(|r| r.systematic(SystematicKind::HeterodyneResidual).value),
                    error: s.error.clone(),
                });
            }
            Entry::Summary(_) | Entry::Calibration(_) | Entry::BandSweep(_) => {}
        }
    }
    out
}

/// Write the three tables into `out_dir`; rewriting gives identical files.
pub fn write(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let paths = [PEAKS_FILE, RATIO_FILE, TEMPERATURE_FILE].map(|f| out_dir.join(f));
    write_table(&paths[0], &report.peaks)?;
    write_table(&paths[1], &report.ratios)?;
    write_table(&paths[2], &report.temperatures)?;
    Ok(paths.to_vec())
}

/// Read the ledger in `ledger_dir`, filter by hash prefix and write tables.
pub fn report(ledger_dir: &Path, out_dir: &Path, hash_prefix: Option<&str>) -> Result<Report> {
    let ledger = Ledger::open(ledger_dir)?;
    let records = ledger.read()?;
    let chosen = select(&records, hash_prefix);
    if chosen.is_empty() {
        return Err(CliError::EmptyLedger(ledger.path()));
    }
    let report = build(&chosen);
    write(&report, out_dir)?;
    Ok(report)
}
