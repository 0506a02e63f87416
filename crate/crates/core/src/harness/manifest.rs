use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the config plus the stage's own options.
    pub hash: String,
    pub status: StageStatus,
    pub seconds: f64,
    /// Files written by the stage, relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load_or_default(out: &Path) -> Result<Self> {
        let path = out.join(MANIFEST_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// True when `stage` already completed under `hash` and its files are
    /// still present.
    pub fn is_current(&self, out: &Path, stage: &str, hash: &str) -> bool {
        self.stages.get(stage).is_some_and(|r| {
            r.status == StageStatus::Complete && r.hash == hash && r.files.iter().all(|f| out.join(f).is_file())
        })
    }

    pub fn record(&mut self, stage: &str, record: StageRecord) {
        self.stages.insert(stage.to_string(), record);
    }

    /// Every file listed by any stage, sorted.
    pub fn all_files(&self) -> Vec<String> {
        let mut files: Vec<String> = self.stages.values().flat_map(|r| r.files.iter().cloned()).collect();
        files.sort();
        files.dedup();
        files
    }
}

pub fn stage_hash(config_hash: &str, stage: &str, options: &str) -> String {
    let mut h = Sha256::new();
    for part in [config_hash, stage, options] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// Collects the paths a stage writes, relative to the output directory.
#[derive(Debug)]
pub struct FileLog {
    root: PathBuf,
    files: Vec<String>,
}

impl FileLog {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf(), files: Vec::new() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Creates parent directories and logs `rel`; returns the full path.
    pub fn path(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let rel = rel.as_ref();
        let full = self.root.join(rel);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let name = rel
            .to_str()
            .ok_or_else(|| Error::InvalidConfig(format!("non-UTF-8 path {}", rel.display())))?
            .replace('\\', "/");
        if !self.files.contains(&name) {
            self.files.push(name);
        }
        Ok(full)
    }

    pub fn write(&mut self, rel: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
        let full = self.path(rel)?;
        std::fs::write(full, contents)?;
        Ok(())
    }

    pub fn into_files(mut self) -> Vec<String> {
        self.files.sort();
        self.files
    }
}
