//! Periodogram CSV files and JSON documents.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use raman_core::spectrum::{Periodogram, WindowId};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    freq_hz: f64,
    psd: f64,
    rbw_hz: f64,
    n_avg: u32,
    window: String,
    seed: u64,
}

pub fn write_periodogram(path: &Path, pg: &Periodogram) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for (freq_hz, psd) in pg.iter() {
        w.serialize(Row {
            freq_hz,
            psd,
            rbw_hz: pg.rbw_hz,
            n_avg: pg.n_avg,
            window: pg.window.as_str().into(),
            seed: pg.seed,
        })
        .map_err(|e| CliError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        file: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Read a periodogram; errors carry the 1-based line number of the file.
pub fn read_periodogram(path: &Path) -> Result<Periodogram> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let expected = ["freq_hz", "psd", "rbw_hz", "n_avg", "window", "seed"];
    if headers.iter().ne(expected) {
        return Err(parse_error(
            path,
            1,
            format!("header must be {}", expected.join(",")),
        ));
    }

    let mut freqs = Vec::new();
    let mut values = Vec::new();
    let mut first: Option<(f64, u32, WindowId, u64)> = None;
    for rec in r.deserialize::<Row>() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            let message = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            parse_error(path, line, message)
        })?;
        let line = freqs.len() as u64 + 2;
        let window = WindowId::parse(&rec.window)
            .ok_or_else(|| parse_error(path, line, format!("unknown window {:?}", rec.window)))?;
        if !rec.freq_hz.is_finite() || !rec.psd.is_finite() {
            return Err(parse_error(path, line, "non-finite value"));
        }
        let meta = (rec.rbw_hz, rec.n_avg, window, rec.seed);
        match first {
            None => first = Some(meta),
            Some(f) if f != meta => {
                return Err(parse_error(
                    path,
                    line,
                    "rbw_hz, n_avg, window and seed must match the first row",
                ))
            }
            Some(_) => {}
        }
        freqs.push(rec.freq_hz);
        values.push(rec.psd);
    }
    let (rbw, n_avg, window, seed) = first.ok_or_else(|| parse_error(path, 2, "no data rows"))?;
    Periodogram::new(window, freqs, values, rbw, n_avg, seed)
        .map_err(|e| parse_error(path, 0, e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("document serialises");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line() as u64, e.to_string()))
}

/// Write rows as CSV with a header taken from the row type.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e.into()))?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| CliError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
