//! Provenance manifests: every output file gets a sibling
//! `<name>.manifest.json` recording the tool version, the resolved
//! configuration, and SHA-256 digests of all inputs and outputs, so a
//! result file can always be traced back to exactly what produced it.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Seconds since the Unix epoch; the only field allowed to differ
    /// between reruns of an identical command.
    pub created_unix: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn digest_all(paths: &[PathBuf]) -> std::io::Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_hex(p)?,
            })
        })
        .collect()
}

/// Builds the manifest for one finished command invocation.
pub fn build(
    command: &str,
    config: serde_json::Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> std::io::Result<RunManifest> {
    Ok(RunManifest {
        tool: "grounding",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config,
        inputs: digest_all(inputs)?,
        outputs: digest_all(outputs)?,
    })
}

/// The manifest path that sits alongside an output file.
pub fn path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
