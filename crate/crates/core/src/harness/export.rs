//! CSV, manifest and checkpoint output.
//!
//! Files written by [`write_experiment`] into the output directory:
//!
//! - `metrics.csv`: one [`MetricsRow`] per seed.
//! - `learning_curve.csv`: one [`LearningPoint`] per (seed, evaluation point).
//! - `summary.json`: the [`RunSummary`](super::RunSummary).
//! - `manifest.json`: a [`Manifest`] with content hashes of the files above.
//! - `checkpoints/seed_<s>/<role>.policy.bin`: final policies.
//!
//! Reals in CSV files carry 12 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::experiment::{ExperimentResult, LearningPoint, MetricsRow};
use crate::error::{LabError, Result};
use crate::marl::AgentSpec;
use crate::nn::{load_head, save_head};

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Serializes a real as its 12-significant-digit decimal.
pub fn sig12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&round12(*x).to_string())
}

/// Hex SHA-256 of `"blob {len}\0"` followed by the content, as git hashes blobs.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| LabError::Format(format!("csv flush: {e}")))
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .map(|r| r.map_err(LabError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub hash: String,
    pub bytes: usize,
}

/// Machine-readable description of an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub crate_version: String,
    /// Hash of the canonical JSON of the configuration.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub diverged: Vec<u64>,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

/// Hash of the JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    Ok(content_hash(&serde_json::to_vec(config)?))
}

fn write_tracked(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    files.push(FileEntry {
        path: name.to_string(),
        hash: content_hash(bytes),
        bytes: bytes.len(),
    });
    Ok(())
}

fn policy_file(dir: &Path, agent: &AgentSpec) -> PathBuf {
    dir.join(format!("{}.policy.bin", agent.role.as_str()))
}

pub fn save_agents(dir: &Path, agents: &[AgentSpec]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in agents {
        save_head(&policy_file(dir, a), &a.policy)?;
    }
    Ok(())
}

/// Loads policies for the roles of `template`, keeping its squash settings.
pub fn load_agents(dir: &Path, template: &[AgentSpec]) -> Result<Vec<AgentSpec>> {
    template
        .iter()
        .map(|t| {
            let policy = load_head(&policy_file(dir, t))?;
            Ok(AgentSpec {
                policy,
                ..t.clone()
            })
        })
        .collect()
}

/// Writes every artifact of `result` into `dir`.
pub fn write_experiment(dir: &Path, result: &ExperimentResult, wall_time_s: f64) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    write_tracked(dir, "metrics.csv", &to_csv::<MetricsRow>(&result.metrics_rows())?, &mut files)?;
    write_tracked(dir, "learning_curve.csv", &to_csv::<LearningPoint>(&result.learning_curve())?, &mut files)?;
    write_tracked(dir, "summary.json", &serde_json::to_vec_pretty(&result.summary)?, &mut files)?;
    for rep in &result.replications {
        save_agents(&dir.join("checkpoints").join(format!("seed_{}", rep.seed)), &rep.agents)?;
    }
    let manifest = Manifest {
        run_id: result.spec.run_id(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(&result.spec)?,
        config: serde_json::to_value(&result.spec)?,
        seeds: result.spec.seeds.clone(),
        diverged: result.summary.diverged.clone(),
        wall_time_s,
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}
