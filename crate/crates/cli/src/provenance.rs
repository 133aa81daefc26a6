//! Provenance sidecars: every command records its seed and the hash of the
//! resolved configuration next to its outputs. No timestamps, so identical
//! runs write identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use rlens_core::error::{Error, Result};

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub command: &'static str,
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
}

pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)
        .map_err(|e| Error::Data(format!("provenance serialization: {e}")))?;
    Ok(hex_digest(&json))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_provenance(dir: &Path, p: &Provenance) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("provenance.json");
    let json = serde_json::to_string_pretty(p)
        .map_err(|e| Error::Data(format!("provenance serialization: {e}")))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}
