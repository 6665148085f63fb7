//! Output directories with a config echo and a checksum manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{IoError, RunError};

pub const CONFIG_ECHO: &str = "config.json";
pub const RUN_MANIFEST: &str = "run_manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputChecksum {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance of one command run. Everything except `wall_clock_seconds` is
/// a function of the configuration alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_sha256: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputChecksum>,
}

/// Collects the files a command writes so that their checksums can be
/// listed in the run manifest.
pub struct OutputDir {
    root: PathBuf,
    outputs: Vec<OutputChecksum>,
    config_sha256: String,
    command: String,
    started: Instant,
}

impl OutputDir {
    /// Creates `root` and writes the resolved configuration into it.
    pub fn create(root: &Path, command: &str, config_json: &str) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|e| IoError::io(root, e))?;
        let mut dir = Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            command: command.to_string(),
            started: Instant::now(),
        };
        dir.write(CONFIG_ECHO, config_json.as_bytes())?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| IoError::io(&path, e))?;
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputChecksum { file: name.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Writes `run_manifest.json`, outputs sorted by name.
    pub fn finish(mut self) -> Result<RunManifest, RunError> {
        self.outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            config_sha256: self.config_sha256,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.root.join(RUN_MANIFEST);
        fs::write(&path, text).map_err(|e| IoError::io(&path, e))?;
        Ok(manifest)
    }
}
