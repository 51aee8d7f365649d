//! Artifact writing: atomic renames, content digests and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    /// Resolved configuration the run used.
    pub config: serde_json::Value,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
    /// Headline numbers of the run.
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::output(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::output(path, e))
}

/// The output directory of one run. Records every file written and the
/// time spent per stage.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<OutputFile>,
    timings: Vec<StageTiming>,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&root).map_err(|e| CliError::output(&root, e))?;
        Ok(OutputDir {
            root,
            files: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(relative);
        write_atomic(&path, bytes)?;
        self.files.retain(|f| f.path != relative);
        self.files.push(OutputFile {
            path: relative.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(shapgame::Error::from)?;
        text.push('\n');
        self.write(relative, text.as_bytes())
    }

    /// Run `f` and record its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn finish(
        self,
        command: &str,
        master_seed: u64,
        config: serde_json::Value,
        summary: serde_json::Value,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: "shapgame".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed,
            config,
            timings: self.timings,
            outputs: self.files,
            summary,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(shapgame::Error::from)?;
        text.push('\n');
        write_atomic(&self.root.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(manifest)
    }
}
