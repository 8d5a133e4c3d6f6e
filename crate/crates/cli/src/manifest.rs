//! Run manifests: resolved config, seed, and digests of every input and
//! artifact.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA: &str = "stormlens-manifest/1";

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema: &'static str,
    pub command: &'a str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn digests(paths: &[PathBuf], relative_to: Option<&Path>) -> CliResult<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            let shown = relative_to.and_then(|base| p.strip_prefix(base).ok()).unwrap_or(p);
            Ok(FileDigest {
                path: shown.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Writes `manifest-<command>.json` into the output directory. Artifact
/// paths are relative to it.
pub fn write(config: &RunConfig, command: &str, inputs: &[PathBuf], artifacts: &[PathBuf]) -> CliResult<PathBuf> {
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config,
        inputs: digests(inputs, None)?,
        artifacts: digests(artifacts, Some(&config.out))?,
    };
    let path = config.out.join(format!("manifest-{command}.json"));
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::input(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lists_relative_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            out: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let a = dir.path().join("a.json");
        std::fs::write(&a, "{}").unwrap();
        let path = write(&config, "test", &[], &[a]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["schema"], MANIFEST_SCHEMA);
        assert_eq!(v["artifacts"][0]["path"], "a.json");
        assert_eq!(v["config"]["seed"], 42);
    }
}
