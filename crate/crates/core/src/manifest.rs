//! Run manifests and atomic file output.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so readers never
/// observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// What a run read, what it wrote, and enough to repeat it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub config_hash: String,
    /// Input file path → SHA-256 of its content.
    pub corpus_hashes: BTreeMap<String, String>,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    /// Artifact name → path.
    pub artifact_paths: BTreeMap<String, String>,
    /// Artifact name → SHA-256 of its content.
    pub artifact_hashes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metrics: serde_json::Value,
}

impl RunManifest {
    pub fn start(subcommand: &str, command_line: Vec<String>, config_hash: String, seed: u64) -> Self {
        RunManifest {
            command_line,
            subcommand: subcommand.to_string(),
            config_hash,
            corpus_hashes: BTreeMap::new(),
            seed,
            started_at: unix_now(),
            finished_at: 0.0,
            artifact_paths: BTreeMap::new(),
            artifact_hashes: BTreeMap::new(),
            metrics: serde_json::Value::Null,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.corpus_hashes
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Writes `bytes` atomically and records the artifact.
    pub fn write_artifact(&mut self, name: &str, path: &Path, bytes: &[u8]) -> io::Result<()> {
        write_atomic(path, bytes)?;
        self.record_artifact(name, path, sha256_hex(bytes));
        Ok(())
    }

    pub fn record_artifact(&mut self, name: &str, path: &Path, sha256: String) {
        self.artifact_paths
            .insert(name.to_string(), path.display().to_string());
        self.artifact_hashes.insert(name.to_string(), sha256);
    }

    /// Stamps the end time and writes the manifest atomically to `dir/manifest.json`.
    pub fn finish(mut self, dir: &Path) -> io::Result<PathBuf> {
        self.finished_at = unix_now();
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self).expect("manifest serialises");
        write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> io::Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        fs::write(&input, "abc").unwrap();
        let mut m = RunManifest::start("train", vec!["lmtc".into(), "train".into()], "h".into(), 7);
        m.add_input(&input).unwrap();
        m.write_artifact("report", &dir.path().join("report.json"), b"{}").unwrap();
        let path = m.finish(dir.path()).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back.seed, 7);
        assert_eq!(
            back.corpus_hashes[&input.display().to_string()],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(back.finished_at >= back.started_at);
        assert_eq!(back.artifact_hashes["report"], sha256_hex(b"{}"));
    }
}
