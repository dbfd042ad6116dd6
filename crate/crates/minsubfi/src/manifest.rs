//! Run manifests: the resolved config plus content hashes of every input file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{git_blob_sha1, read_bytes, write_json};

pub const MANIFEST_VERSION: &str = "minsubfi-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    /// `git hash-object` of the file contents.
    pub sha1: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: String,
    pub tool_version: String,
    pub command: String,
    pub config: RunConfig,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Manifest {
            manifest_version: MANIFEST_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let sha1 = git_blob_sha1(&read_bytes(path)?);
        self.inputs.push(InputHash { path: path.to_path_buf(), sha1 });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
