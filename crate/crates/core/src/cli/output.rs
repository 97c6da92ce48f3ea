use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output files and manifest records collected during a run, written in
/// one pass at the end.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
    records: Vec<Value>,
}

impl OutputSet {
    pub fn add(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    pub fn record(&mut self, value: Value) {
        self.records.push(value);
    }

    /// Writes every file, then the manifest at `manifest`: the records in
    /// order followed by one entry per file with its SHA-256. Paths in the
    /// manifest are file names only.
    pub fn finish(self, manifest: &Path) -> Result<(), CliError> {
        let mut lines = String::new();
        for r in &self.records {
            lines.push_str(&r.to_string());
            lines.push('\n');
        }
        for (path, contents) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            }
            fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let entry = json!({"kind": "file", "path": name, "bytes": contents.len(), "sha256": sha256_hex(contents)});
            lines.push_str(&entry.to_string());
            lines.push('\n');
        }
        if let Some(dir) = manifest.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        fs::write(manifest, lines).map_err(|e| CliError::Io(format!("{}: {e}", manifest.display())))
    }
}
