//! Versioned JSON artifacts.
//!
//! Every model or manifest written to disk is wrapped in a small envelope
//! carrying a `kind` tag and a format `version`, so a loader can fail with a
//! clear message instead of deserializing the wrong payload. Serialization
//! uses pretty-printed JSON with a fixed field order, making artifacts
//! byte-stable across runs.

use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Envelope for an on-disk JSON artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub version: u32,
    pub payload: T,
}

/// Writes `payload` wrapped in an artifact envelope.
pub fn save_artifact<T: Serialize>(
    path: &Path,
    kind: &str,
    version: u32,
    payload: &T,
) -> Result<()> {
    let artifact = Artifact {
        kind: kind.to_string(),
        version,
        payload,
    };
    let mut bytes = serde_json::to_vec_pretty(&artifact)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads an artifact, checking its kind and version before deserializing.
pub fn load_artifact<T: DeserializeOwned>(path: &Path, kind: &str, version: u32) -> Result<T> {
    let raw = std::fs::read_to_string(path)?;
    let envelope: Artifact<serde_json::Value> = serde_json::from_str(&raw)?;
    if envelope.kind != kind {
        return Err(Error::Schema(format!(
            "artifact {path:?} has kind {:?}, expected {kind:?}",
            envelope.kind
        )));
    }
    if envelope.version != version {
        return Err(Error::Schema(format!(
            "artifact {path:?} has version {}, expected {version}",
            envelope.version
        )));
    }
    Ok(serde_json::from_value(envelope.payload)?)
}
