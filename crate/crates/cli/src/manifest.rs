use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written next to every output so a run can be reproduced exactly.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub threads: usize,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, config: impl Serialize, threads: usize) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: Vec::new(),
            outputs: Vec::new(),
            threads,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Digest a file, or every file below a directory in sorted order.
    pub fn add_input(&mut self, path: &Path) -> Result<(), Failure> {
        let mut files = Vec::new();
        collect_files(path, &mut files).map_err(|e| Failure::invalid(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
        for f in files {
            let bytes = std::fs::read(&f).map_err(|e| Failure::invalid(anyhow::anyhow!("cannot read {}: {e}", f.display())))?;
            self.inputs.push(InputDigest {
                path: f.display().to_string(),
                sha256: hex(&Sha256::digest(&bytes)),
            });
        }
        Ok(())
    }

    pub fn add_output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        medzisc::io::write_text(&dir.join("manifest.json"), &text).map_err(Failure::runtime)
    }
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for e in entries {
            collect_files(&e, out)?;
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
