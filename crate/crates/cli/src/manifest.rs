//! Run manifest: configuration echo, seeds and a digest of every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub artifact_version: String,
    pub config: BTreeMap<String, String>,
    /// Seed path scheme; per-replica paths are listed in the seeds file.
    pub seed_scheme: String,
    pub seeds_file: String,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub pass: bool,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_entry(dir: &Path, name: &str) -> std::io::Result<FileEntry> {
    let bytes = fs::read(dir.join(name))?;
    Ok(FileEntry { path: name.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
}

impl RunManifest {
    /// Files whose current digest differs from the recorded one.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| file_entry(dir, &f.path).map(|e| e != **f).unwrap_or(true))
            .map(|f| f.path.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}
