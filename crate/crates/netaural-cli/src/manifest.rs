//! Every subcommand writes one run manifest: the resolved configuration,
//! seed, input/output paths, and output checksums. Re-running with the
//! recorded configuration reproduces the outputs bit-identically on one
//! platform.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct ArtifactRecord {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<ArtifactRecord>,
    pub timestamp_utc: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: "netaural",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp_utc: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn record_input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes a file and records it with its checksum.
    pub fn write_output(&mut self, path: &Path, contents: &[u8]) -> io::Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(path, contents)?;
        let digest = Sha256::digest(contents);
        self.outputs.push(ArtifactRecord {
            path: path.to_path_buf(),
            bytes: contents.len() as u64,
            sha256: hex_string(&digest),
        });
        Ok(())
    }

    /// Records an output that was written elsewhere.
    pub fn record_output_file(&mut self, path: &Path) -> io::Result<()> {
        let contents = fs::read(path)?;
        let digest = Sha256::digest(&contents);
        self.outputs.push(ArtifactRecord {
            path: path.to_path_buf(),
            bytes: contents.len() as u64,
            sha256: hex_string(&digest),
        });
        Ok(())
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        fs::write(path, json)
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
