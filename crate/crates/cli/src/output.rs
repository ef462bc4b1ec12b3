//! Result emission: CSV/JSON artifacts, atomic writes and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use quasinil::Caps;
use serde::{Deserialize, Serialize};

/// One result file of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        let mut contents = serde_json::to_string_pretty(value)?;
        contents.push('\n');
        Ok(Artifact {
            name: name.into(),
            contents,
        })
    }
}

/// Builds a header-first comma-separated table.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(CsvTable { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self, name: impl Into<String>) -> Result<Artifact> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        Ok(Artifact {
            name: name.into(),
            contents: String::from_utf8(bytes)?,
        })
    }
}

/// Everything needed to reproduce the files of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub coeffs: Option<serde_json::Value>,
    pub levels: Vec<usize>,
    pub caps: Caps,
    pub seed: Option<u64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub files: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Output of one command before it is written anywhere.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Printed to stdout when no output directory is given.
    pub primary: Artifact,
    pub extra: Vec<Artifact>,
    pub coeffs: Option<serde_json::Value>,
    pub levels: Vec<usize>,
    pub seed: Option<u64>,
}

impl RunOutput {
    pub fn new(primary: Artifact) -> Self {
        RunOutput {
            primary,
            extra: Vec::new(),
            coeffs: None,
            levels: Vec::new(),
            seed: None,
        }
    }

    pub fn with(mut self, extra: Artifact) -> Self {
        self.extra.push(extra);
        self
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &Artifact> {
        std::iter::once(&self.primary).chain(&self.extra)
    }

    pub fn manifest(&self, command: &[String], caps: Caps) -> RunManifest {
        RunManifest {
            command: command.to_vec(),
            coeffs: self.coeffs.clone(),
            levels: self.levels.clone(),
            caps,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files: self.artifacts().map(|a| a.name.clone()).collect(),
        }
    }

    /// Writes every artifact and the manifest into `dir`.
    pub fn write_to(&self, dir: &Path, command: &[String], caps: Caps) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for a in self.artifacts() {
            written.push(write_atomic(dir, &a.name, a.contents.as_bytes())?);
        }
        let manifest = serde_json::to_string_pretty(&self.manifest(command, caps))? + "\n";
        written.push(write_atomic(dir, MANIFEST_FILE, manifest.as_bytes())?);
        Ok(written)
    }
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f =
            fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target).with_context(|| format!("renaming into {}", target.display()))?;
    Ok(target)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}
