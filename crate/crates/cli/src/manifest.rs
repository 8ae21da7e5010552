//! Run manifests: every command records what it ran, a hash of the
//! resolved configuration, and where the results went. Timestamps live
//! only here, so result files stay byte-identical across reruns.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_SCHEMA: &str = "deeplq-manifest/1";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub tool_version: String,
    /// SHA-256 over the command name, the resolved parameters and the raw
    /// model file bytes. Identical hash ⇒ identical result files.
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<PathBuf>,
}

pub struct ManifestBuilder {
    command: String,
    hasher: Sha256,
    seed: Option<u64>,
    started: u128,
    outputs: Vec<PathBuf>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        ManifestBuilder {
            command: command.to_string(),
            hasher,
            seed: None,
            started: now_ms(),
            outputs: Vec::new(),
        }
    }

    /// Feed resolved configuration into the hash (serialized canonically by
    /// field order).
    pub fn config<T: Serialize>(&mut self, value: &T) {
        let text = serde_json::to_string(value).expect("config serializes");
        self.hasher.update(text.as_bytes());
    }

    pub fn input_bytes(&mut self, bytes: &[u8]) {
        self.hasher.update(bytes);
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.hasher.update(seed.to_le_bytes());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(self, path: &Path) -> std::io::Result<()> {
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: hex_digest(self.hasher),
            seed: self.seed,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(path, text + "\n")
    }
}

fn hex_digest(hasher: Sha256) -> String {
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Manifest path for a result file: `<file>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
