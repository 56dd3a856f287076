//! Atomic file output and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

pub const MANIFEST_SCHEMA: &str = "tmqi-manifest/1";
pub const OUTPUT_SCHEMA: &str = "tmqi-output/1";

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    pub format: Format,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn create(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), format, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), contents)?;
        self.files.push(OutputFile { name: name.to_string(), sha256: hex::encode(Sha256::digest(contents)), bytes: contents.len() });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// `stem.json` or `stem.csv` depending on the format.
    pub fn write_table(&mut self, stem: &str, json: &serde_json::Value, csv: &str) -> Result<(), CliError> {
        match self.format {
            Format::Json => self.write_json(&format!("{stem}.json"), json),
            Format::Csv => self.write(&format!("{stem}.csv"), csv.as_bytes()),
        }
    }

    pub fn finish(self, manifest: Manifest) -> Result<PathBuf, CliError> {
        let manifest = ManifestFile { outputs: self.files, ..manifest.into() };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub wall_time_s: f64,
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    schema: &'static str,
    command: String,
    version: &'static str,
    seed: u64,
    config_sha256: String,
    config: serde_json::Value,
    wall_time_s: f64,
    outputs: Vec<OutputFile>,
}

impl From<Manifest> for ManifestFile {
    fn from(m: Manifest) -> Self {
        Self {
            schema: MANIFEST_SCHEMA,
            config_sha256: config_hash(&m.command, m.seed, &m.config),
            command: m.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: m.seed,
            config: m.config,
            wall_time_s: m.wall_time_s,
            outputs: Vec::new(),
        }
    }
}

/// SHA-256 of the resolved configuration in canonical JSON form.
pub fn config_hash(command: &str, seed: u64, config: &serde_json::Value) -> String {
    let canonical = serde_json::json!({"command": command, "seed": seed, "config": config});
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}
