//! On-disk formats: `.demos.jsonl`, `.policy.json` and `.featnet.json`.
//!
//! JSON files are written pretty-printed with a trailing newline. Floats use the
//! shortest round-tripping representation, so load followed by save reproduces
//! a file byte for byte.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use minsubfi_core::demos::DemoSet;
use minsubfi_core::policy::{PolicyParams, POLICY_VERSION};
use minsubfi_core::repr::{FeatureNetParams, FEATNET_VERSION};
use minsubfi_core::Trajectory;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha1::{Digest, Sha1};

use crate::error::{CliError, Result};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    create_parent(path)?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, &to_json_bytes(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::format(path, e))
}

/// Writes one trajectory per line.
pub fn write_demos(path: &Path, demos: &DemoSet) -> Result<()> {
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in demos.iter() {
        serde_json::to_writer(&mut w, d).map_err(|e| CliError::format(path, e))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_demos(path: &Path) -> Result<DemoSet> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut demos = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trajectory =
            serde_json::from_str(&line).map_err(|e| CliError::format(path, format!("line {}: {e}", i + 1)))?;
        t.validate().map_err(|e| CliError::format(path, format!("line {}: {e}", i + 1)))?;
        demos.push(t);
    }
    DemoSet::new(demos).map_err(|e| CliError::format(path, e))
}

pub fn save_policy(path: &Path, params: &PolicyParams) -> Result<()> {
    write_json(path, params)
}

pub fn load_policy(path: &Path) -> Result<PolicyParams> {
    let p: PolicyParams = read_json(path)?;
    if p.version != POLICY_VERSION {
        return Err(CliError::format(path, format!("unsupported policy version {:?}", p.version)));
    }
    p.validate().map_err(|e| CliError::format(path, e))?;
    Ok(p)
}

pub fn save_featnet(path: &Path, net: &FeatureNetParams) -> Result<()> {
    write_json(path, net)
}

pub fn load_featnet(path: &Path) -> Result<FeatureNetParams> {
    let n: FeatureNetParams = read_json(path)?;
    if n.version != FEATNET_VERSION {
        return Err(CliError::format(path, format!("unsupported feature-net version {:?}", n.version)));
    }
    FeatureNetParams::new(n.architecture.clone(), n.weights.clone()).map_err(|e| CliError::format(path, e))
}

/// Hex SHA-1 of `bytes` framed as a git blob, as printed by `git hash-object`.
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
