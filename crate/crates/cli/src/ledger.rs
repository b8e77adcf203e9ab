//! Append-only results ledger.
//!
//! `ledger.jsonl` holds one deterministic record per line. Wall-clock
//! timestamps go to `ledger.meta.jsonl`, keyed by line number, so identical
//! runs produce byte-identical ledgers. Each referenced configuration is kept
//! under `configs/<hash>.toml`.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use raman_core::thermometry::{BandSweepRow, HeterodyneCalibration};
use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignSummary, PointRecord, SweepRecord};
use crate::config::CampaignConfig;
use crate::error::{CliError, Result};
use crate::io::ensure_dir;
use crate::pipeline::{OperatingPoint, PointAnalysis};

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const META_FILE: &str = "ledger.meta.jsonl";
pub const CONFIG_DIR: &str = "configs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    pub entry: Entry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entry {
    Point(PointRecord),
    Sweep(SweepRecord),
    Summary(CampaignSummary),
    Analysis(AnalysisRecord),
    Calibration(CalibrationRecord),
    BandSweep(BandSweepRecord),
}

/// Result of analysing one pair of spectrum files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub source: String,
    pub operating_point: Option<OperatingPoint>,
    /// Configured occupation, when the spectra came with a model sidecar.
    pub truth_n_bar: Option<f64>,
    pub analysis: PointAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub source: String,
    pub calibration: HeterodyneCalibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSweepRecord {
    pub operating_point: OperatingPoint,
    pub noiseless: bool,
    pub half_width_hz: f64,
    pub rows: Vec<BandSweepRow>,
    /// Largest temperature change relative to the zero-offset value.
    pub relative_variation: Option<f64>,
    /// Relative statistical σ of the zero-offset temperature.
    pub relative_sigma: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    line: usize,
    unix_seconds: u64,
    command: String,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    dir: PathBuf,
}

impl Ledger {
    pub fn open(dir: &Path) -> Result<Self> {
        ensure_dir(dir)?;
        Ok(Ledger {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self) -> PathBuf {
        self.dir.join(LEDGER_FILE)
    }

    /// Store the configuration snapshot for its hash. An existing snapshot
    /// under the same hash must hold the same configuration.
    pub fn store_config(&self, cfg: &CampaignConfig) -> Result<String> {
        let hash = cfg.hash();
        let dir = self.dir.join(CONFIG_DIR);
        ensure_dir(&dir)?;
        let path = dir.join(format!("{hash}.toml"));
        if path.exists() {
            let stored = CampaignConfig::load(&path)?;
            if stored.hash() != hash {
                return Err(CliError::config(
                    path.display().to_string(),
                    "stored snapshot does not match its hash",
                ));
            }
        } else {
            std::fs::write(&path, cfg.to_toml()).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(hash)
    }

    /// Load the snapshot for `hash` and check that it still hashes to it.
    pub fn config(&self, hash: &str) -> Result<CampaignConfig> {
        let path = self.dir.join(CONFIG_DIR).join(format!("{hash}.toml"));
        let cfg = CampaignConfig::load(&path)?;
        if cfg.hash() != hash {
            return Err(CliError::config(
                path.display().to_string(),
                "snapshot does not match its hash",
            ));
        }
        Ok(cfg)
    }

    fn line_count(&self) -> Result<usize> {
        let path = self.path();
        match std::fs::File::open(&path) {
            Ok(f) => Ok(BufReader::new(f).lines().count()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(0),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    /// Append records in order; earlier lines are never touched.
    pub fn append(&self, records: &[Record]) -> Result<()> {
        let first = self.line_count()?;
        let path = self.path();
        let mut body = String::new();
        for r in records {
            body.push_str(&serde_json::to_string(r).expect("record serialises"));
            body.push('\n');
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CliError::io(&path, e))?;
        f.write_all(body.as_bytes())
            .map_err(|e| CliError::io(&path, e))?;

        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut meta = String::new();
        for (i, r) in records.iter().enumerate() {
            let m = Meta {
                line: first + i + 1,
                unix_seconds: now,
                command: r.command.clone(),
            };
            meta.push_str(&serde_json::to_string(&m).expect("meta serialises"));
            meta.push('\n');
        }
        let meta_path = self.dir.join(META_FILE);
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&meta_path)
            .and_then(|mut f| f.write_all(meta.as_bytes()))
            .map_err(|e| CliError::io(&meta_path, e))
    }

    pub fn read(&self) -> Result<Vec<Record>> {
        let path = self.path();
        let f = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| CliError::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| CliError::Parse {
                file: path.clone(),
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }
}
