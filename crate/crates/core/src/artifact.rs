//! Typed on-disk artifacts with provenance.
//!
//! Every artifact is a JSON envelope: schema version, kind tag, the seed and
//! config that produced it, the corpus manifest hash when one applies, and
//! the typed payload. Loading checks version and kind before touching the
//! payload. Writes go through a temp file in the destination directory and a
//! final rename, so a crash never leaves a partial artifact behind.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("artifact parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema version {found} unsupported (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("artifact kind mismatch: file holds `{found}`, expected `{expected}`")]
    KindMismatch {
        expected: ArtifactKind,
        found: ArtifactKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Model,
    Coefficients,
    Transitions,
    Policy,
    Distribution,
    Report,
    SimulatorReport,
    TrainingReport,
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ArtifactKind::Model => "model",
            ArtifactKind::Coefficients => "coefficients",
            ArtifactKind::Transitions => "transitions",
            ArtifactKind::Policy => "policy",
            ArtifactKind::Distribution => "distribution",
            ArtifactKind::Report => "report",
            ArtifactKind::SimulatorReport => "simulator_report",
            ArtifactKind::TrainingReport => "training_report",
        };
        f.write_str(name)
    }
}

/// Provenance carried by every artifact.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Echo of the producing command's configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_manifest_sha256: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    kind: ArtifactKind,
    #[serde(flatten)]
    meta: ArtifactMeta,
    payload: T,
}

fn io_err(path: &Path, source: std::io::Error) -> ArtifactError {
    ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write bytes via a temp file plus rename in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "artifact".to_string());
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Serialize and save a typed artifact.
pub fn save<T: Serialize>(
    path: &Path,
    kind: ArtifactKind,
    meta: ArtifactMeta,
    payload: &T,
) -> Result<(), ArtifactError> {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        meta,
        payload,
    };
    let mut bytes = serde_json::to_vec_pretty(&envelope)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Load an artifact, checking schema version and kind.
pub fn load<T: DeserializeOwned>(
    path: &Path,
    expected: ArtifactKind,
) -> Result<(T, ArtifactMeta), ArtifactError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    // Probe the header first so kind errors beat payload shape errors.
    #[derive(Deserialize)]
    struct Header {
        schema_version: u32,
        kind: ArtifactKind,
    }
    let header: Header = serde_json::from_slice(&bytes)?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(ArtifactError::Version {
            found: header.schema_version,
        });
    }
    if header.kind != expected {
        return Err(ArtifactError::KindMismatch {
            expected,
            found: header.kind,
        });
    }
    let envelope: Envelope<T> = serde_json::from_slice(&bytes)?;
    Ok((envelope.payload, envelope.meta))
}
