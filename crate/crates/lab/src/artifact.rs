//! Artifact files: CSV tables, the JSON summary, the config echo and the manifest.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(x) => write!(f, "{x}"),
            // Shortest representation that round-trips.
            Cell::Float(x) => write!(f, "{x:?}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of a column.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let k = self.column(name).unwrap_or_else(|| panic!("no column {name} in {}", self.name));
        self.rows
            .iter()
            .map(|r| match &r[k] {
                Cell::Float(x) => *x,
                Cell::Int(x) => *x as f64,
                Cell::Bool(b) => *b as u8 as f64,
                Cell::Text(s) => s.parse().unwrap_or(f64::NAN),
            })
            .collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// A checked statement about a run. Failing a hard assertion makes the run fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub hard: bool,
    pub detail: String,
}

impl Assertion {
    pub fn hard(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, hard: true, detail: detail.into() }
    }

    pub fn soft(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, hard: false, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn hard_failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| a.hard && !a.pass).collect()
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub version: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub version: String,
    /// Numeric artifacts covered by replay.
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn seeds_text(seeds: &[u64]) -> String {
    seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

/// CSV text with a comment header carrying the provenance of the numbers.
pub fn render_csv(table: &Table, hash: &str, seeds: &[u64]) -> Result<Vec<u8>> {
    let mut out = format!("# qelab {VERSION}\n# config_hash {hash}\n# seeds {}\n", seeds_text(seeds)).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| LabError::Artifact { path: table.file_name().into(), reason: e.to_string() };
    w.write_record(&table.columns).map_err(bad)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string())).map_err(bad)?;
    }
    let body = w.into_inner().map_err(|e| LabError::Artifact { path: table.file_name().into(), reason: e.to_string() })?;
    out.extend(body);
    Ok(out)
}

pub fn render_summary(cfg: &ExperimentConfig, outcome: &Outcome) -> Vec<u8> {
    let s = Summary {
        kind: cfg.kind.name().to_string(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds.clone(),
        version: VERSION.to_string(),
        passed: outcome.passed(),
        assertions: outcome.assertions.clone(),
    };
    let mut v = serde_json::to_vec_pretty(&s).expect("summary serializes");
    v.push(b'\n');
    v
}

/// Every numeric artifact of a run, by file name, in a fixed order.
pub fn render_all(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<(String, Vec<u8>)>> {
    let hash = cfg.hash();
    let mut files = Vec::new();
    for t in &outcome.tables {
        files.push((t.file_name(), render_csv(t, &hash, &cfg.seeds)?));
    }
    files.push((SUMMARY_FILE.to_string(), render_summary(cfg, outcome)));
    Ok(files)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

/// Writes the config echo, the artifacts and the manifest into `dir`.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let echo = ExperimentConfig { out: None, ..cfg.clone() };
    write(&dir.join(CONFIG_FILE), echo.to_toml()?.as_bytes())?;
    let files = render_all(cfg, outcome)?;
    let mut digests = Vec::new();
    for (name, bytes) in &files {
        write(&dir.join(name), bytes)?;
        digests.push(FileDigest { name: name.clone(), sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        kind: cfg.kind.name().to_string(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds.clone(),
        version: VERSION.to_string(),
        files: digests,
    };
    let mut m = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    m.push(b'\n');
    write(&dir.join(MANIFEST_FILE), &m)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(LabError::MissingArtifact(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Artifact { path, reason: e.to_string() })
}
