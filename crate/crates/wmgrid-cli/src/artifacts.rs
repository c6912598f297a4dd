//! Run artifacts: signal and window CSVs plus a TOML manifest.
//!
//! Every CSV header starts with `<stream>/<schema version>`; that column holds the
//! step index. Column names and order are fixed per schema version.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wmgrid_sim::{DguThresholds, RunOutcome, SeedSet, TimeSeries};

pub const SIGNALS_TAG: &str = "signals/1";
pub const WINDOWS_TAG: &str = "windows/1";
pub const MANIFEST_SCHEMA: u32 = 1;
pub const SIGNALS_FILE: &str = "signals.csv";
pub const WINDOWS_FILE: &str = "windows.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{stream}: {message}")]
    Malformed { stream: String, message: String },
    #[error("missing stream {0}")]
    Missing(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn malformed(stream: &str, message: impl Into<String>) -> ArtifactError {
    ArtifactError::Malformed {
        stream: stream.to_string(),
        message: message.into(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Column names of `signals.csv` for `n_dgu` units and the listed detector DGUs (zero-based).
pub fn signal_columns(n_dgu: usize, detector_dgus: &[usize]) -> Vec<String> {
    let mut cols = vec![SIGNALS_TAG.to_string(), "time".to_string()];
    for group in ["actual", "reported"] {
        for i in 1..=n_dgu {
            cols.push(format!("{group}_omega_{i}"));
            cols.push(format!("{group}_v_{i}"));
        }
    }
    for group in ["command", "applied", "watermark"] {
        for i in 1..=n_dgu {
            cols.push(format!("{group}_p_{i}"));
            cols.push(format!("{group}_q_{i}"));
        }
    }
    for d in detector_dgus {
        cols.push(format!("innovation_omega_{}", d + 1));
        cols.push(format!("innovation_v_{}", d + 1));
    }
    cols.push("state_norm".to_string());
    cols
}

pub const WINDOW_COLUMNS: [&str; 8] = [
    WINDOWS_TAG,
    "time",
    "dgu",
    "chi1",
    "chi2",
    "chi1_alarm",
    "chi2_alarm",
    "confirmed",
];

fn num(v: f64) -> String {
    // Shortest round-trip representation keeps files byte-stable and lossless.
    format!("{v:e}")
}

pub fn write_signals<W: Write>(w: W, ts: &TimeSeries) -> Result<(), ArtifactError> {
    let n_dgu = ts.actual.width / 2;
    let dets: Vec<usize> = ts.detectors.iter().map(|d| d.dgu).collect();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(signal_columns(n_dgu, &dets))?;
    let mut row: Vec<String> = Vec::new();
    for k in 0..ts.steps() {
        row.clear();
        row.push(k.to_string());
        row.push(num(ts.time[k]));
        for s in [&ts.actual, &ts.reported, &ts.command, &ts.applied, &ts.watermark, &ts.innovation] {
            row.extend(s.row(k).iter().map(|v| num(*v)));
        }
        row.push(num(ts.state_norm[k]));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_windows<W: Write>(w: W, ts: &TimeSeries) -> Result<(), ArtifactError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(WINDOW_COLUMNS)?;
    let mut rows: Vec<(usize, usize, &wmgrid_detect::WindowRecord)> = ts
        .detectors
        .iter()
        .flat_map(|d| d.windows.iter().map(move |r| (r.step, d.dgu, r)))
        .collect();
    rows.sort_by_key(|(k, d, _)| (*k, *d));
    for (k, dgu, r) in rows {
        out.write_record([
            k.to_string(),
            num(r.time),
            (dgu + 1).to_string(),
            num(r.chi1),
            num(r.chi2),
            u8::from(r.decision.chi1_fired).to_string(),
            u8::from(r.decision.chi2_fired).to_string(),
            u8::from(r.confirmed).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row of `windows.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRow {
    pub step: usize,
    pub time: f64,
    /// One-based DGU index.
    pub dgu: usize,
    pub chi1: f64,
    pub chi2: f64,
    pub chi1_alarm: bool,
    pub chi2_alarm: bool,
    pub confirmed: bool,
}

impl WindowRow {
    pub fn alarm(&self) -> bool {
        self.chi1_alarm || self.chi2_alarm
    }
}

fn parse_f64(stream: &str, line: usize, s: &str) -> Result<f64, ArtifactError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| malformed(stream, format!("line {line}: '{s}' is not a number")))
}

fn parse_usize(stream: &str, line: usize, s: &str) -> Result<usize, ArtifactError> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| malformed(stream, format!("line {line}: '{s}' is not an index")))
}

fn parse_flag(stream: &str, line: usize, s: &str) -> Result<bool, ArtifactError> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(malformed(stream, format!("line {line}: '{other}' is not 0 or 1"))),
    }
}

pub fn read_windows<R: Read>(r: R) -> Result<Vec<WindowRow>, ArtifactError> {
    let stream = WINDOWS_FILE;
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(WINDOW_COLUMNS.iter().copied()) {
        return Err(malformed(stream, format!("unexpected header; expected {}", WINDOW_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != WINDOW_COLUMNS.len() {
            return Err(malformed(stream, format!("line {line}: expected {} fields", WINDOW_COLUMNS.len())));
        }
        let dgu = parse_usize(stream, line, &rec[2])?;
        if dgu == 0 {
            return Err(malformed(stream, format!("line {line}: DGU index is one-based")));
        }
        rows.push(WindowRow {
            step: parse_usize(stream, line, &rec[0])?,
            time: parse_f64(stream, line, &rec[1])?,
            dgu,
            chi1: parse_f64(stream, line, &rec[3])?,
            chi2: parse_f64(stream, line, &rec[4])?,
            chi1_alarm: parse_flag(stream, line, &rec[5])?,
            chi2_alarm: parse_flag(stream, line, &rec[6])?,
            confirmed: parse_flag(stream, line, &rec[7])?,
        });
    }
    Ok(rows)
}

/// `signals.csv` as a header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SignalTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_signals<R: Read>(r: R) -> Result<SignalTable, ArtifactError> {
    let stream = SIGNALS_FILE;
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let columns: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if columns.first().map(String::as_str) != Some(SIGNALS_TAG) || columns.get(1).map(String::as_str) != Some("time") {
        return Err(malformed(stream, format!("header must start with {SIGNALS_TAG},time")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != columns.len() {
            return Err(malformed(stream, format!("line {line}: expected {} fields", columns.len())));
        }
        let row = rec
            .iter()
            .map(|f| parse_f64(stream, line, f))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(SignalTable { columns, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioInfo {
    pub name: String,
    pub source: String,
    pub sha256: String,
    pub attacked: bool,
    /// Earliest attack start, seconds.
    pub attack_onset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    pub tool_version: String,
    /// Hash over scenario text, seeds, thresholds and tool version.
    pub run_id: String,
    pub scenario: ScenarioInfo,
    pub seeds: SeedSet,
    pub steps: usize,
    pub sample_period: f64,
    pub window_samples: usize,
    pub outcome: RunOutcome,
    #[serde(default)]
    pub thresholds: Vec<DguThresholds>,
    #[serde(default)]
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn run_id(scenario_text: &str, seeds: &SeedSet, thresholds: &[DguThresholds], tool_version: &str) -> String {
        let mut h = Sha256::new();
        h.update(scenario_text.as_bytes());
        h.update(format!("{seeds:?}").as_bytes());
        for t in thresholds {
            h.update(format!("{}:{:e}:{:e};", t.index, t.chi1, t.chi2).as_bytes());
        }
        h.update(tool_version.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn parse(text: &str) -> Result<Self, ArtifactError> {
        let m: Self = toml::from_str(text).map_err(|e| malformed(MANIFEST_FILE, e.to_string()))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(malformed(MANIFEST_FILE, format!("unsupported schema {}", m.schema)));
        }
        if !(m.sample_period > 0.0) {
            return Err(malformed(MANIFEST_FILE, "sample_period must be positive"));
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// Reads a stream listed in the manifest and checks its hash.
pub fn read_listed(dir: &Path, manifest: &Manifest, name: &str) -> Result<Vec<u8>, ArtifactError> {
    let entry = manifest
        .file(name)
        .ok_or_else(|| ArtifactError::Missing(format!("{name} (not listed in {MANIFEST_FILE})")))?;
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|_| ArtifactError::Missing(path.display().to_string()))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(malformed(name, "content hash differs from the manifest (partial or modified file)"));
    }
    Ok(bytes)
}
