//! Output directory with a content-hashed manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Serialize)]
struct Entry {
    path: String,
    sha256: String,
    bytes: usize,
}

pub struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, (String, usize)>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn put(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io(&path))
    }

    /// Writes `name` and records it in the manifest.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bytes = bytes.as_ref();
        self.put(name, bytes)?;
        let hash = hex::encode(Sha256::digest(bytes));
        self.files.insert(name.to_string(), (hash, bytes.len()));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
            path: name.to_string(),
            source,
        })?;
        text.push('\n');
        self.write(name, text)
    }

    /// Writes a file that is not part of the reproducible set.
    pub fn write_volatile<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
            path: name.to_string(),
            source,
        })?;
        self.put(name, text.as_bytes())
    }

    pub fn finish(self) -> Result<Vec<String>> {
        let entries: Vec<Entry> = self
            .files
            .iter()
            .map(|(path, (sha256, bytes))| Entry {
                path: path.clone(),
                sha256: sha256.clone(),
                bytes: *bytes,
            })
            .collect();
        let text = serde_json::to_string_pretty(&serde_json::json!({ "files": entries })).map_err(|source| {
            CliError::Json {
                path: "manifest.json".into(),
                source,
            }
        })?;
        self.put("manifest.json", format!("{text}\n").as_bytes())?;
        Ok(self.files.into_keys().collect())
    }
}
