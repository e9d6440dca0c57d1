//! Run manifests and the writer that records a digest for every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use nlrd_core::analysis::fit_decay;
use nlrd_core::evolution::{Outcome, RunRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Result};
use crate::execute::Status;
use crate::output::{series_columns, CSV_VERSION, JSON_VERSION, SNAPSHOT_VERSION};
use crate::scenario::Scenario;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formats {
    pub csv: u32,
    pub json: u32,
    pub snapshot: u32,
    pub csv_columns: Vec<String>,
}

impl Formats {
    pub fn current(rec: &RunRecord) -> Self {
        Self {
            csv: CSV_VERSION,
            json: JSON_VERSION,
            snapshot: SNAPSHOT_VERSION,
            csv_columns: series_columns(rec),
        }
    }
}

/// Headline numbers for sweep tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub final_mass: f64,
    pub max_sup: f64,
    pub l2_slope: Option<f64>,
    pub t_star: Option<f64>,
}

impl RunSummary {
    pub fn of(rec: &RunRecord) -> Self {
        Self {
            steps: rec.steps,
            t_final: rec.times.last().copied().unwrap_or(0.0),
            final_mass: rec.mass.last().copied().unwrap_or(0.0),
            max_sup: rec.sup.iter().cloned().fold(0.0, f64::max),
            l2_slope: match rec.outcome {
                Outcome::Completed => fit_decay(rec, 2.0, None).ok().map(|f| f.slope),
                _ => None,
            },
            t_star: match rec.outcome {
                Outcome::Blowup { time, .. } => Some(time),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub scenario: Scenario,
    pub alpha: f64,
    pub m_cap: f64,
    pub cstar: Option<f64>,
    pub m0: f64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    pub outcome: String,
    pub status: Status,
    pub exit_code: i32,
    /// Names of the analysis invariants that failed.
    pub violations: Vec<String>,
    pub summary: RunSummary,
    pub formats: Formats,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read(&path).map_err(io_err(&path))?;
        Ok(serde_json::from_slice(&text)?)
    }

    /// Recomputes every digest; returns the artifacts that no longer match.
    pub fn stale_artifacts(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| match fs::read(dir.join(&a.path)) {
                Ok(bytes) => sha256_hex(&bytes) != a.sha256,
                Err(_) => true,
            })
            .map(|a| a.path.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files under one run directory and remembers their digests.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Attaches the artifact list and writes the manifest through a
    /// temporary file and a rename.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.artifacts = self.artifacts;
        let tmp = self.root.join(format!("{MANIFEST_FILE}.tmp"));
        let dst = self.root.join(MANIFEST_FILE);
        fs::write(&tmp, serde_json::to_vec_pretty(&manifest)?).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &dst).map_err(io_err(&dst))?;
        Ok(manifest)
    }
}
