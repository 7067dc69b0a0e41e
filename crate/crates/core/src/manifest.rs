//! Run manifests: enough to regenerate every output byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RawConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub root_seed: u64,
    /// Fully explicit configuration in SI units.
    pub config: RawConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputRef>,
    pub outputs: Vec<OutputEntry>,
}

/// A generated file, held in memory until the whole command succeeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub file: String,
    pub data: Vec<u8>,
}

impl Output {
    pub fn entry(&self) -> OutputEntry {
        OutputEntry {
            file: self.file.clone(),
            bytes: self.data.len() as u64,
            sha256: sha256_hex(&self.data),
        }
    }
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }

    /// Files whose digest differs from `outputs`, or that are missing on
    /// either side.
    pub fn mismatches(&self, outputs: &[Output]) -> Vec<String> {
        let fresh: Vec<OutputEntry> = outputs.iter().map(Output::entry).collect();
        let mut bad: Vec<String> = self
            .outputs
            .iter()
            .filter(|e| !fresh.contains(e))
            .map(|e| e.file.clone())
            .collect();
        for e in &fresh {
            if !self.outputs.iter().any(|o| o.file == e.file) {
                bad.push(e.file.clone());
            }
        }
        bad
    }
}

/// Writes `outputs` and their manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, manifest: &Manifest, outputs: &[Output]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for o in outputs {
        let path = dir.join(&o.file);
        std::fs::write(&path, &o.data).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn mismatch_detection() {
        let a = Output {
            file: "a.csv".into(),
            data: b"x\n".to_vec(),
        };
        let m = Manifest {
            tool: "t".into(),
            version: "0".into(),
            command: "c".into(),
            root_seed: 0,
            config: RawConfig::default(),
            input: None,
            outputs: vec![a.entry()],
        };
        assert!(m.mismatches(std::slice::from_ref(&a)).is_empty());
        let b = Output {
            file: "a.csv".into(),
            data: b"y\n".to_vec(),
        };
        assert_eq!(m.mismatches(&[b]), vec!["a.csv".to_string()]);
        let extra = Output {
            file: "b.csv".into(),
            data: Vec::new(),
        };
        assert_eq!(m.mismatches(&[a, extra]), vec!["b.csv".to_string()]);
    }
}
