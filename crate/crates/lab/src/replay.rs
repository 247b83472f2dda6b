//! Re-execution of a recorded run and byte comparison of its artifacts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{read_manifest, render_all, sha256_hex, CONFIG_FILE};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub file: String,
    /// First differing line (1-based), if any line differs.
    pub line: Option<usize>,
    pub recorded: String,
    pub replayed: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub config_hash: String,
    pub matched: Vec<String>,
    pub mismatched: Vec<Mismatch>,
    /// Files whose bytes no longer match the digest in the manifest.
    pub tampered: Vec<String>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.mismatched.is_empty() && self.tampered.is_empty()
    }
}

fn first_difference(a: &[u8], b: &[u8]) -> Mismatch {
    let (la, lb): (Vec<&[u8]>, Vec<&[u8]>) = (a.split(|&c| c == b'\n').collect(), b.split(|&c| c == b'\n').collect());
    let k = la.iter().zip(&lb).position(|(x, y)| x != y).unwrap_or(la.len().min(lb.len()));
    let show = |v: &Vec<&[u8]>| v.get(k).map(|l| String::from_utf8_lossy(l).into_owned()).unwrap_or_default();
    Mismatch { file: String::new(), line: Some(k + 1), recorded: show(&la), replayed: show(&lb) }
}

/// Loads the config echo, checks it against the manifest hash, reruns the
/// experiment in memory and compares every recorded artifact byte for byte.
pub fn replay(dir: &Path) -> Result<ReplayReport> {
    let manifest = read_manifest(dir)?;
    let cfg_path = dir.join(CONFIG_FILE);
    if !cfg_path.exists() {
        return Err(LabError::MissingArtifact(cfg_path));
    }
    let cfg = ExperimentConfig::load(&cfg_path)?;
    let found = cfg.hash();
    if found != manifest.config_hash {
        return Err(LabError::HashMismatch { expected: manifest.config_hash, found });
    }
    let outcome = crate::experiments::execute(&cfg)?;
    let fresh = render_all(&cfg, &outcome)?;
    let mut report =
        ReplayReport { config_hash: found, matched: Vec::new(), mismatched: Vec::new(), tampered: Vec::new() };
    for digest in &manifest.files {
        let path = dir.join(&digest.name);
        if !path.exists() {
            return Err(LabError::MissingArtifact(path));
        }
        let recorded = fs::read(&path).map_err(|e| LabError::io(&path, e))?;
        if sha256_hex(&recorded) != digest.sha256 {
            report.tampered.push(digest.name.clone());
        }
        match fresh.iter().find(|(n, _)| *n == digest.name) {
            Some((_, bytes)) if *bytes == recorded => report.matched.push(digest.name.clone()),
            Some((_, bytes)) => {
                let mut m = first_difference(&recorded, bytes);
                m.file = digest.name.clone();
                report.mismatched.push(m);
            }
            None => report.mismatched.push(Mismatch {
                file: digest.name.clone(),
                line: None,
                recorded: String::new(),
                replayed: "not produced by the replay".into(),
            }),
        }
    }
    for (name, _) in &fresh {
        if !manifest.files.iter().any(|f| &f.name == name) {
            report.mismatched.push(Mismatch {
                file: name.clone(),
                line: None,
                recorded: "not recorded".into(),
                replayed: String::new(),
            });
        }
    }
    Ok(report)
}
