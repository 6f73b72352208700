//! Result files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::rng::GAUSSIAN_ALGORITHM;

pub const TOOL_NAME: &str = "perceptron-lab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub config_sha256: String,
    pub gaussian_algorithm: String,
    pub warnings: Vec<String>,
    pub files: Vec<FileEntry>,
}

/// Writes files into one directory and remembers what was written.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
    warnings: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), warnings: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        if name.is_empty() || name.contains(['/', '\\']) || name == MANIFEST_FILE {
            return Err(Error::Domain(format!("invalid output file name {name:?}")));
        }
        fs::write(self.dir.join(name), contents)?;
        let entry = FileEntry {
            name: name.to_owned(),
            bytes: contents.len() as u64,
            sha256: format!("{:x}", Sha256::digest(contents)),
        };
        match self.files.iter_mut().find(|f| f.name == name) {
            Some(f) => *f = entry,
            None => self.files.push(entry),
        }
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Writes `config.json` and `manifest.json` and returns the manifest.
    pub fn finish(mut self, config: &ExperimentConfig, kind: ExperimentKind) -> Result<Manifest> {
        let mut text = config.to_json()?;
        text.push('\n');
        self.write("config.json", text.as_bytes())?;
        let manifest = Manifest {
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            experiment: kind,
            seed: config.seed,
            config_sha256: config.hash()?,
            gaussian_algorithm: GAUSSIAN_ALGORITHM.to_owned(),
            warnings: self.warnings,
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}
