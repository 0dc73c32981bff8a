//! Per-stage manifests: inputs with hashes, effective settings and counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, Stage};
use crate::report::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    /// Base name only, so manifests do not depend on where a run happened.
    pub name: String,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(path: &Path) -> Result<Self, PipelineError> {
        let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
        Ok(Self {
            name: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub stage: Stage,
    pub inputs: Vec<InputFile>,
    /// The configuration as loaded, with command-line overrides applied.
    pub config: serde_json::Value,
    pub seed: u64,
    pub counts: BTreeMap<String, usize>,
    pub failures: usize,
    pub transport_failures: usize,
}

impl Manifest {
    pub fn new(stage: Stage, config: serde_json::Value, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            stage,
            inputs: Vec::new(),
            config,
            seed,
            counts: BTreeMap::new(),
            failures: 0,
            transport_failures: 0,
        }
    }

    pub fn add_inputs(&mut self, paths: &[PathBuf]) -> Result<(), PipelineError> {
        for p in paths {
            self.inputs.push(InputFile::hash(p)?);
        }
        Ok(())
    }

    /// `<stream>.manifest.json` next to a stream, `manifest.json` inside a directory.
    pub fn path_for(output: &Path, stage: Stage) -> PathBuf {
        if stage == Stage::Report {
            output.join("manifest.json")
        } else {
            let mut name = output.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::contract(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_uses_base_name_and_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, "abc").unwrap();
        let f = InputFile::hash(&p).unwrap();
        assert_eq!(f.name, "abc.txt");
        assert_eq!(f.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_paths() {
        assert_eq!(
            Manifest::path_for(Path::new("out/x.jsonl"), Stage::Extract),
            PathBuf::from("out/x.jsonl.manifest.json")
        );
        assert_eq!(Manifest::path_for(Path::new("rep"), Stage::Report), PathBuf::from("rep/manifest.json"));
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new(Stage::Score, serde_json::json!({"seed": 1}), 1);
        m.counts.insert("scores".into(), 3);
        let p = dir.path().join("m.json");
        m.write(&p).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);
    }
}
