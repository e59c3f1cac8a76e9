//! Output directories: artifact files plus a `manifest.json` recording the
//! config, input hashes and output hashes. Manifests carry no timestamps, so
//! a rerun with the same config reproduces every byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wnrefl_core::io::write_atomic;
use wnrefl_core::{Error, Result};

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(bytes).iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    /// Input artifact path to sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to sha256.
    pub outputs: BTreeMap<String, String>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Collects files for one command and writes the manifest last.
pub struct ArtifactDir {
    dir: PathBuf,
    manifest: Manifest,
}

impl ArtifactDir {
    pub fn create(dir: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: config.clone(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                metadata: BTreeMap::new(),
            },
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn input(&mut self, label: String, sha256: String) {
        self.manifest.inputs.insert(label, sha256);
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metadata serializes");
        self.manifest.metadata.insert(key.to_string(), v);
    }

    pub fn finish(self) -> Result<Manifest> {
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())?;
        Ok(self.manifest)
    }
}

/// A finished output directory from an earlier command.
pub struct InputDir {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl InputDir {
    /// Opens `dir`, checking that it was written by `command`.
    pub fn open(dir: &Path, command: &str) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if manifest.command != command {
            return Err(Error::InvalidInput(format!(
                "{} holds `{}` output, expected `{command}`",
                dir.display(),
                manifest.command
            )));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    /// Reads `name` and checks it against the manifest hash.
    pub fn read(&self, name: &str) -> Result<(Vec<u8>, String)> {
        let want = self.manifest.outputs.get(name).ok_or_else(|| {
            Error::InvalidInput(format!("{} does not list {name}", self.dir.join(MANIFEST).display()))
        })?;
        let bytes = fs::read(self.dir.join(name))?;
        let got = sha256_hex(&bytes);
        if &got != want {
            return Err(Error::Format(format!(
                "{} was modified after it was written (sha256 {got}, manifest {want})",
                self.dir.join(name).display()
            )));
        }
        Ok((bytes, got))
    }

    pub fn meta(&self, key: &str) -> Result<&serde_json::Value> {
        self.manifest
            .metadata
            .get(key)
            .ok_or_else(|| Error::Format(format!("{} lacks metadata `{key}`", self.dir.display())))
    }
}
