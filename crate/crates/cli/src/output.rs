//! Run manifests and atomic file output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qentropy::DegeneracySource;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub degeneracy_source: Option<DegeneracySource>,
    pub version: &'static str,
    /// SHA-256 of each input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Records the common flags and the subcommand arguments as one object.
    pub fn new(subcommand: &'static str, common: &impl Serialize, args: &impl Serialize) -> Self {
        let mut parameters = serde_json::Map::new();
        for part in [serde_json::to_value(common), serde_json::to_value(args)] {
            if let Ok(serde_json::Value::Object(map)) = part {
                parameters.extend(map);
            }
        }
        Self {
            subcommand,
            parameters: serde_json::Value::Object(parameters),
            seed: None,
            degeneracy_source: None,
            version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Output files staged until every computation has succeeded.
pub struct Outputs {
    primary: Option<PathBuf>,
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: Vec<u8>,
}

impl Outputs {
    pub fn new(primary: Option<PathBuf>) -> Self {
        Self { primary, files: Vec::new(), stdout: Vec::new() }
    }

    /// Primary result: to `--out` when given, stdout otherwise.
    pub fn primary(&mut self, contents: String) {
        match &self.primary {
            Some(p) => self.files.push((p.clone(), contents.into_bytes())),
            None => self.stdout.extend(contents.into_bytes()),
        }
    }

    pub fn extra(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents.into_bytes()));
    }

    /// Writes everything; the manifest accompanies the primary output file.
    pub fn commit(self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = self.files.iter().map(|(p, _)| p.display().to_string()).collect();
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        let manifest_target = self
            .primary
            .as_deref()
            .or_else(|| self.files.first().map(|(p, _)| p.as_path()));
        if let Some(target) = manifest_target {
            let mut json = serde_json::to_string_pretty(&manifest)?;
            json.push('\n');
            write_atomic(&manifest_path(target), json.as_bytes())?;
        }
        std::io::stdout().write_all(&self.stdout)?;
        Ok(())
    }
}
