use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raman_cli::campaign::{RunOptions, SweepKind};
use raman_cli::commands::{self, PointSelection};
use raman_cli::config::CampaignConfig;
use raman_cli::error::{CliError, Result};
use raman_cli::pipeline::describe;

/// Sideband-asymmetry thermometry: simulate, analyse and run campaigns.
#[derive(Debug, Parser)]
#[command(name = "raman", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Source {
    /// Campaign configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig2-22, fig3-32, fig3-52 or fig3d-32.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<CampaignConfig> {
        commands::load_config(self.config.as_deref(), self.preset.as_deref(), self.seed)
    }

    fn load_optional(&self) -> Result<Option<CampaignConfig>> {
        if self.config.is_none() && self.preset.is_none() {
            Ok(None)
        } else {
            self.load().map(Some)
        }
    }
}

#[derive(Debug, Args)]
struct Point {
    /// Bath temperature in kelvin (default: first environment).
    #[arg(long, value_name = "K")]
    t0: Option<f64>,
    /// Index into the damping powers (default: strongest).
    #[arg(long, value_name = "I")]
    damp_index: Option<usize>,
}

impl Point {
    fn selection(&self) -> PointSelection {
        PointSelection {
            t0_kelvin: self.t0,
            damp_index: self.damp_index,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write Stokes and anti-Stokes periodograms for one operating point.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        point: Point,
        /// Write expected values instead of a noisy realisation.
        #[arg(long)]
        noiseless: bool,
        #[arg(long, value_name = "DIR", default_value = "raman-out")]
        out: PathBuf,
    },
    /// Fit a pair of spectrum files and estimate the occupation.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Directory holding stokes.csv and antistokes.csv (default: --out).
        #[arg(long, value_name = "DIR")]
        spectra: Option<PathBuf>,
        /// Fail unless calibration tones or a calibration document are present.
        #[arg(long)]
        require_cal: bool,
        #[arg(long, value_name = "DIR", default_value = "raman-out")]
        out: PathBuf,
    },
    /// Heterodyne response ratio from calibration tone spectra.
    Calibrate {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_name = "DIR")]
        spectra: Option<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = "raman-out")]
        out: PathBuf,
    },
    /// Damping sweeps for every bath temperature and probe power.
    Campaign {
        #[command(flatten)]
        source: Source,
        /// Run sweeps one after another (results are identical).
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        noiseless: bool,
        /// Override the number of Monte Carlo replicates.
        #[arg(long, value_name = "N")]
        replicates: Option<u32>,
        #[arg(long, value_name = "DIR", default_value = "raman-out")]
        out: PathBuf,
    },
    /// Band-ratio temperature as the integration band centre moves.
    BandSensitivity {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        noiseless: bool,
        #[arg(long, value_name = "DIR", default_value = "raman-out")]
        out: PathBuf,
    },
    /// Plot-ready tables from a ledger.
    Report {
        /// Directory holding ledger.jsonl (default: --out).
        #[arg(long, value_name = "DIR")]
        ledger: Option<PathBuf>,
        /// Keep only records whose configuration hash starts with this.
        #[arg(long, value_name = "PREFIX")]
        hash: Option<String>,
        #[arg(long, value_name = "DIR", default_value = "raman-out")]
        out: PathBuf,
    },
}

fn micro(w: f64) -> f64 {
    raman_cli::report::microwatts(w)
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}"))
        .unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            source,
            point,
            noiseless,
            out,
        } => {
            let cfg = source.load()?;
            let s = commands::simulate(&cfg, point.selection(), noiseless, &out)?;
            println!(
                "{}: {}; n = {:.4}, Γm = {:.1} Hz; wrote {}",
                cfg.name,
                describe(&s.operating_point),
                s.truth.n_bar,
                s.truth.gamma_m_hz,
                out.display()
            );
        }
        Command::Analyze {
            source,
            spectra,
            require_cal,
            out,
        } => {
            let dir = spectra.unwrap_or_else(|| out.clone());
            let rec = commands::analyze_files(source.load_optional()?, &dir, &out, require_cal)?;
            let r = &rec.analysis.result;
            let ratio = r.ratio.expect("point results carry a ratio");
            println!(
                "{:?}: R = {:.5} ± {:.5}, n = {} ± {}, T_eff = {} K (ρ = {:.5})",
                r.method,
                ratio.value,
                ratio.sigma(),
                opt(r.n_bar, 4),
                opt(r.n_bar_sigma, 4),
                opt(r.t_eff_kelvin, 9),
                rec.analysis.calibration.rho,
            );
            if r.n_bar.is_none() {
                println!("ratio is not above 1: occupation unbounded");
            }
        }
        Command::Calibrate {
            source,
            spectra,
            out,
        } => {
            let dir = spectra.unwrap_or_else(|| out.clone());
            let cal = commands::calibrate_files(source.load_optional()?, &dir, &out)?;
            println!("ρ = {:.6} ± {:.6}", cal.rho, cal.sigma);
        }
        Command::Campaign {
            source,
            serial,
            noiseless,
            replicates,
            out,
        } => {
            let mut cfg = source.load()?;
            if let Some(r) = replicates {
                cfg.seeds.replicates = r;
                cfg.validate()?;
            }
            let opts = RunOptions { serial, noiseless };
            let result = commands::campaign(&cfg, opts, &out)?;
            print_summary(&cfg, &result, &out);
            if result.failed() {
                let s = &result.summary;
                let err = CliError::PartialFailure {
                    failed: s.failed_points + s.failed_sweeps,
                    total: s.total_points + result.outcomes.len(),
                };
                eprintln!("warning: {err}");
                return Ok(ExitCode::from(err.exit_code() as u8));
            }
        }
        Command::BandSensitivity {
            source,
            point,
            noiseless,
            out,
        } => {
            let cfg = source.load()?;
            let res = commands::band_sensitivity_cmd(&cfg, point.selection(), noiseless, &out)?;
            println!("{:>10} {:>10} {:>12}", "offset_Hz", "R", "T_eff_K");
            for row in &res.record.rows {
                println!(
                    "{:>10.0} {:>10.5} {:>12}",
                    row.offset_hz,
                    row.ratio.value,
                    opt(row.t_eff_kelvin, 9)
                );
            }
            println!(
                "relative variation {} (statistical {})",
                opt(res.record.relative_variation, 4),
                opt(res.record.relative_sigma, 4)
            );
        }
        Command::Report { ledger, hash, out } => {
            let dir = ledger.unwrap_or_else(|| out.clone());
            let (rep, paths) = commands::report_cmd(&dir, &out, hash.as_deref())?;
            println!(
                "{} peak rows, {} ratio rows, {} temperature rows",
                rep.peaks.len(),
                rep.ratios.len(),
                rep.temperatures.len()
            );
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(cfg: &CampaignConfig, out: &commands::CampaignOutput, dir: &Path) {
    println!("{} ({})", cfg.name, &out.config_hash[..12]);
    println!(
        "{:>12} {:>10} {:>5} {:>12} {:>10} {:>10} {:>8}",
        "sweep", "T0_set_K", "reps", "T0_K", "sigma_K", "ba_K", "|dT|/T"
    );
    for r in &out.summary.rows {
        let label = match r.kind {
            SweepKind::Temperature => "temperature".to_string(),
            SweepKind::ProbePower => format!("P_p={:.0}uW", micro(r.p_probe_watts)),
        };
        println!(
            "{:>12} {:>10.2} {:>5} {:>12} {:>10} {:>10} {:>8}",
            label,
            r.t0_set_kelvin,
            r.replicates,
            opt(r.t0_extracted_kelvin, 4),
            opt(r.t0_sigma_kelvin, 4),
            opt(r.backaction_kelvin, 4),
            opt(r.relative_deviation, 4)
        );
    }
    println!(
        "mean |dT|/T = {}; {} of {} points failed; ledger in {}",
        opt(out.summary.mean_relative_deviation, 4),
        out.summary.failed_points,
        out.summary.total_points,
        dir.display()
    );
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
