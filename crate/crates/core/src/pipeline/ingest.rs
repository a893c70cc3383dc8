//! Trace readers.
//!
//! CSV layout (metadata in comment lines, header required):
//!
//! ```text
//! # temperature_k=0.077
//! # power_dbm=-60
//! # resonator=R1
//! freq_hz,s21_re,s21_im
//! 3654000000,0.98,0.01
//! ```
//!
//! Two-port Touchstone files (`.s2p`) carry the same metadata as `!` comment
//! lines; S21 is the second parameter pair on each data line. Declared powers
//! are reduced by the reference-plane attenuation to give chip-plane power.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::num;
use crate::resfit::SweepRecord;

pub const CSV_HEADER: &str = "freq_hz,s21_re,s21_im";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<SweepRecord>,
    pub rejected: Vec<Rejection>,
    pub accepted_paths: Vec<String>,
}

#[derive(Default)]
struct Metadata {
    temperature_k: Option<f64>,
    power_dbm: Option<f64>,
    resonator: Option<String>,
}

impl Metadata {
    fn absorb(&mut self, line: &str) -> std::result::Result<(), String> {
        let Some((key, value)) = line.split_once('=') else {
            return Ok(());
        };
        let key = key.trim();
        let value = value.trim();
        let number = |v: &str| v.parse::<f64>().map_err(|_| format!("bad value for {key}: '{v}'"));
        match key {
            "temperature_k" => self.temperature_k = Some(number(value)?),
            "power_dbm" => self.power_dbm = Some(number(value)?),
            "resonator" => self.resonator = Some(value.to_string()),
            k if k.starts_with("temperature") || k.starts_with("power") || k.starts_with("freq") => {
                return Err(format!("unit ambiguity: metadata key '{k}' (expected temperature_k / power_dbm)"))
            }
            _ => {}
        }
        Ok(())
    }

    fn finish(self, freqs: Vec<f64>, s21: Vec<Complex64>, attenuation_db: f64) -> std::result::Result<SweepRecord, String> {
        let t = self.temperature_k.ok_or("missing metadata temperature_k")?;
        let p = self.power_dbm.ok_or("missing metadata power_dbm")?;
        let id = self.resonator.ok_or("missing metadata resonator")?;
        if freqs.is_empty() {
            return Err("no data rows".into());
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("non-monotone frequency".into());
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(format!("temperature_k must be > 0, got {t}"));
        }
        SweepRecord::new(freqs, s21, t, p - attenuation_db, id).map_err(|e| e.to_string())
    }
}

/// Parses the CSV trace layout.
pub fn parse_csv(text: &str, attenuation_db: f64) -> std::result::Result<SweepRecord, String> {
    let mut meta = Metadata::default();
    let mut header_seen = false;
    let mut freqs = Vec::new();
    let mut s21 = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            meta.absorb(c)?;
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != CSV_HEADER.split(',').collect::<Vec<_>>() {
                return Err(format!("malformed header '{line}', expected '{CSV_HEADER}'"));
            }
            header_seen = true;
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| format!("line {}: unparsable number", lineno + 1))?;
        if vals.len() != 3 {
            return Err(format!("line {}: expected 3 columns, got {}", lineno + 1, vals.len()));
        }
        freqs.push(vals[0]);
        s21.push(Complex64::new(vals[1], vals[2]));
    }
    if !header_seen {
        return Err("malformed header: none found".into());
    }
    meta.finish(freqs, s21, attenuation_db)
}

#[derive(Clone, Copy)]
enum PairFormat {
    Ri,
    Ma,
    Db,
}

/// Parses a two-port Touchstone (v1) file and keeps S21.
pub fn parse_touchstone(text: &str, attenuation_db: f64) -> std::result::Result<SweepRecord, String> {
    let mut meta = Metadata::default();
    // Touchstone defaults when no option line is present
    let mut freq_scale = 1e9;
    let mut format = PairFormat::Ma;
    let mut option_seen = false;
    let mut tokens: Vec<f64> = Vec::new();
    for raw in text.lines() {
        let (data, comment) = match raw.split_once('!') {
            Some((d, c)) => (d, Some(c)),
            None => (raw, None),
        };
        if let Some(c) = comment {
            meta.absorb(c)?;
        }
        let data = data.trim();
        if data.is_empty() {
            continue;
        }
        if let Some(opts) = data.strip_prefix('#') {
            if option_seen {
                return Err("unit ambiguity: more than one option line".into());
            }
            option_seen = true;
            for word in opts.split_whitespace().map(str::to_ascii_uppercase) {
                match word.as_str() {
                    "HZ" => freq_scale = 1.0,
                    "KHZ" => freq_scale = 1e3,
                    "MHZ" => freq_scale = 1e6,
                    "GHZ" => freq_scale = 1e9,
                    "RI" => format = PairFormat::Ri,
                    "MA" => format = PairFormat::Ma,
                    "DB" => format = PairFormat::Db,
                    "S" | "R" => {}
                    w if w.parse::<f64>().is_ok() => {}
                    w => return Err(format!("unsupported Touchstone option '{w}'")),
                }
            }
            continue;
        }
        if data.starts_with('[') {
            return Err("Touchstone v2 keywords are not supported".into());
        }
        for tok in data.split_whitespace() {
            tokens.push(tok.parse::<f64>().map_err(|_| format!("unparsable number '{tok}'"))?);
        }
    }
    if !tokens.len().is_multiple_of(9) {
        return Err(format!("{} values is not a whole number of two-port rows", tokens.len()));
    }
    let mut freqs = Vec::with_capacity(tokens.len() / 9);
    let mut s21 = Vec::with_capacity(tokens.len() / 9);
    for row in tokens.chunks_exact(9) {
        freqs.push(if freq_scale == 1.0 { row[0] } else { row[0] * freq_scale });
        let (a, b) = (row[3], row[4]);
        s21.push(match format {
            PairFormat::Ri => Complex64::new(a, b),
            PairFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            PairFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        });
    }
    meta.finish(freqs, s21, attenuation_db)
}

/// Writes a trace as a Touchstone file in Hz/RI with S11 = S22 = 0 and
/// S12 = S21.
pub fn write_touchstone(record: &SweepRecord, attenuation_db: f64, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "! temperature_k={}", num(record.temperature_k))?;
    writeln!(w, "! power_dbm={}", num(record.applied_power_dbm + attenuation_db))?;
    writeln!(w, "! resonator={}", record.resonator_id)?;
    writeln!(w, "# HZ S RI R 50")?;
    for (f, z) in record.frequencies_hz.iter().zip(&record.s21) {
        let (re, im) = (num(z.re), num(z.im));
        writeln!(w, "{} 0 0 {re} {im} {re} {im} 0 0", num(*f))?;
    }
    Ok(())
}

fn is_touchstone(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("s2p"))
}

fn is_trace_file(path: &Path) -> bool {
    is_touchstone(path)
        || path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads one trace file.
pub fn read_trace(path: &Path, attenuation_db: f64) -> Result<SweepRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = if is_touchstone(path) {
        parse_touchstone(&text, attenuation_db)
    } else {
        parse_csv(&text, attenuation_db)
    };
    parsed.map_err(|msg| Error::Parse {
        path: path.to_path_buf(),
        msg,
    })
}

/// Expands directories (non-recursively) to their `.csv` / `.s2p` files.
pub fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| Error::io(p, e))?;
            for entry in entries {
                let path = entry.map_err(|e| Error::io(p, e))?.path();
                if path.is_file() && is_trace_file(&path) {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

/// Reads every input, collecting rejections instead of stopping.
/// Records come back sorted by (resonator, temperature, power, path).
pub fn ingest(paths: &[PathBuf], attenuation_db: f64) -> Result<Ingested> {
    let files = expand_inputs(paths)?;
    let results: Vec<(String, Result<SweepRecord>)> = files
        .par_iter()
        .map(|p| (p.display().to_string(), read_trace(p, attenuation_db)))
        .collect();
    let mut out = Ingested::default();
    let mut keyed = Vec::new();
    for (path, r) in results {
        match r {
            Ok(rec) => keyed.push((path, rec)),
            Err(e) => out.rejected.push(Rejection {
                path,
                reason: match e {
                    Error::Parse { msg, .. } => msg,
                    other => other.to_string(),
                },
            }),
        }
    }
    keyed.sort_by(|(pa, a), (pb, b)| {
        a.resonator_id
            .cmp(&b.resonator_id)
            .then(a.temperature_k.total_cmp(&b.temperature_k))
            .then(a.applied_power_dbm.total_cmp(&b.applied_power_dbm))
            .then(pa.cmp(pb))
    });
    for (path, rec) in keyed {
        out.accepted_paths.push(path);
        out.records.push(rec);
    }
    Ok(out)
}
