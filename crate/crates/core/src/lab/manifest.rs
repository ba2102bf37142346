use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// Configuration echo in the same TOML syntax accepted by `--config`.
    pub config: String,
    pub code_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    /// `completed`, `tube_exit: ...` or `blowup: ...`.
    pub outcome: String,
    pub files: Vec<FileEntry>,
    pub summary: BTreeMap<String, f64>,
}

pub fn file_entry(dir: &Path, rel: &str) -> Result<FileEntry> {
    let bytes = std::fs::read(dir.join(rel))?;
    Ok(FileEntry { path: rel.to_string(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)) })
}

impl RunManifest {
    /// Writes `manifest.json` through a temporary file and a rename.
    pub fn write_atomic(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(".manifest.json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, dir.join("manifest.json"))?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<RunManifest> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?)
    }
}
