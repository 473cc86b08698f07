//! File emission with a provenance header on every artefact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOLKIT: &str = concat!("bragg ", env!("CARGO_PKG_VERSION"));

/// What produced a file: toolkit version, species and a hash of the full
/// resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub toolkit: &'static str,
    pub command: String,
    pub species: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Provenance {
    /// Hashes the canonical JSON form of `resolved`, which should hold every
    /// input that affects the output.
    pub fn new(
        command: &str,
        species: &str,
        resolved: &impl Serialize,
        seed: Option<u64>,
    ) -> Result<Self> {
        let canonical = serde_json::to_vec(resolved).context("cannot serialise configuration")?;
        Ok(Self {
            toolkit: TOOLKIT,
            command: command.to_string(),
            species: species.to_string(),
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            seed,
        })
    }

    /// `# key = value` lines for CSV and text outputs.
    pub fn comment_header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# toolkit = {}", self.toolkit);
        let _ = writeln!(out, "# command = {}", self.command);
        let _ = writeln!(out, "# species = {}", self.species);
        let _ = writeln!(out, "# config_sha256 = {}", self.config_sha256);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed = {seed}");
        }
        out
    }

    /// Serialises `body` as pretty JSON with a `metadata` member added. Objects
    /// get the key merged in so existing readers of `body` keep working.
    pub fn json_document(&self, body: &impl Serialize) -> Result<String> {
        let meta = serde_json::to_value(self)?;
        let value = match serde_json::to_value(body)? {
            Value::Object(mut map) => {
                map.insert("metadata".into(), meta);
                Value::Object(map)
            }
            other => json!({ "metadata": meta, "data": other }),
        };
        Ok(serde_json::to_string_pretty(&value)?)
    }
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
