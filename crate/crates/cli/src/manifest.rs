//! Run manifests, content hashes and atomic file writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::resolve::{RunConfig, SeedSource};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileRole {
    Config,
    Table,
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub role: FileRole,
    pub path: PathBuf,
    /// SHA-256 of the git blob encoding `blob <len>\0<bytes>`.
    pub blob_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config: RunConfig,
    pub seed_source: SeedSource,
    pub wall_seconds: f64,
    pub timings: BTreeMap<String, f64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub replayed_from: Option<PathBuf>,
}

pub fn blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(role: FileRole, path: &Path) -> CliResult<FileHash> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileHash {
        role,
        path: path.to_path_buf(),
        blob_sha256: blob_sha256(&bytes),
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(MANIFEST_SUFFIX);
    PathBuf::from(s)
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: not a run manifest: {e}", path.display())))
}

/// Fails when a table or input file changed since the manifest was written.
pub fn check_inputs(manifest: &RunManifest) -> CliResult<()> {
    for h in manifest.inputs.iter().filter(|h| matches!(h.role, FileRole::Table | FileRole::Input)) {
        let now = hash_file(h.role.clone(), &h.path).map_err(|e| CliError::config(e.to_string()))?;
        if now.blob_sha256 != h.blob_sha256 {
            return Err(CliError::config(format!(
                "{} changed since the manifest was written (hash {} != {})",
                h.path.display(),
                now.blob_sha256,
                h.blob_sha256
            )));
        }
    }
    Ok(())
}
