use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub const FILE_NAME: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Resolved configuration, input hashes and tool version of one run.
/// Output paths are recorded by file name only so that runs into different
/// directories produce identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_fingerprint: Option<String>,
    pub config: Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            schema_version: corposcope::profile::SCHEMA_VERSION,
            tool: "corposcope",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config_fingerprint: None,
            config: Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    /// Writes `contents` to `path` and records the file name.
    pub fn output(&mut self, path: &Path, contents: &str) -> CliResult<()> {
        write_file(path, contents)?;
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        self.outputs.push(name);
        Ok(())
    }

    pub fn finish(mut self, dir: &Path) -> CliResult<()> {
        self.outputs.sort();
        let mut text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::internal(format!("manifest serialization: {e}")))?;
        text.push('\n');
        write_file(&dir.join(FILE_NAME), &text)
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::internal(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

pub fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

/// Directory that holds an output file.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
