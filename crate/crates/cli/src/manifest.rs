//! Index of the artifacts written by a pipeline run.

use std::path::Path;

use reeb_core::{ReebError, Result};
use serde::{Deserialize, Serialize};

use crate::json::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Completed,
    /// Ran and wrote its artifact, but a check failed or the computation errored.
    Failed,
    /// Not attempted because a prerequisite did not complete.
    Skipped,
    /// Absent from the configuration.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
    /// Mathematical object the artifact instantiates.
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Exit code of the failure, as used by the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
    pub artifacts: Vec<ArtifactEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub name: String,
    pub seed: u64,
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
    /// Sorted index of every concept named by an artifact.
    pub concepts: Vec<String>,
}

impl ArtifactManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn artifact(&self, file: &str) -> Option<&ArtifactEntry> {
        self.stages.iter().flat_map(|s| &s.artifacts).find(|a| a.file == file)
    }

    /// `(file, digest)` pairs in stage order.
    pub fn digests(&self) -> Vec<(String, String)> {
        self.stages
            .iter()
            .flat_map(|s| &s.artifacts)
            .map(|a| (a.file.clone(), a.sha256.clone()))
            .collect()
    }

    /// First stage that failed.
    pub fn failure(&self) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.status == StageStatus::Failed)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }

    /// Every referenced file exists with the recorded digest and names a
    /// concept listed in the index; every completed stage has an artifact.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for s in &self.stages {
            if s.status == StageStatus::Completed && s.artifacts.is_empty() {
                return Err(ReebError::Numerical(format!("stage {} completed without an artifact", s.stage)));
            }
            for a in &s.artifacts {
                let bytes = std::fs::read(dir.join(&a.file))?;
                let digest = sha256_hex(&bytes);
                if digest != a.sha256 {
                    return Err(ReebError::Numerical(format!(
                        "{}: digest {digest} does not match manifest {}",
                        a.file, a.sha256
                    )));
                }
                if self.concepts.binary_search(&a.concept).is_err() {
                    return Err(ReebError::Numerical(format!("{}: concept '{}' not indexed", a.file, a.concept)));
                }
                let doc: serde_json::Value = serde_json::from_slice(&bytes)?;
                if doc.get("concept").and_then(|c| c.as_str()) != Some(a.concept.as_str()) {
                    return Err(ReebError::Numerical(format!("{}: concept field disagrees with manifest", a.file)));
                }
            }
        }
        Ok(())
    }
}
