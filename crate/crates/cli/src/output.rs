//! Run directory: manifest, JSON results and tab-separated tables.
//!
//! Every numeric file carries the run hash (JSON field `manifest`, or a
//! `# manifest <hash>` first line in tables). Nothing in the outputs
//! depends on wall time or thread count.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, RunConfig};
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub version: String,
    pub command: String,
    /// Hash of the run: command, tool version and canonical configuration.
    pub manifest: String,
    pub config_sha256: String,
    pub seed: u64,
    pub catalog_version: u32,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        let config_sha256 = config.hash();
        let mut h = Sha256::new();
        for part in [command, &version, &config_sha256] {
            h.update(part.as_bytes());
            h.update(b"\n");
        }
        Self {
            format_version: FORMAT_VERSION,
            version,
            command: command.into(),
            manifest: hex(&h.finalize()),
            config_sha256,
            seed: config.seed,
            catalog_version: rbdo_core::models::CATALOG_VERSION,
            status: Status::Running,
            converged: None,
            error: None,
            files: Vec::new(),
        }
    }
}

/// Delimited text table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    fn render(&self, hash: &str) -> String {
        let mut s = format!("# manifest {hash}\n{}\n", self.columns.join("\t"));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join("\t"));
        }
        s
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_error(parent))?;
    }
    std::fs::write(path, text).map_err(io_error(path))
}

/// Result of opening the output directory.
#[derive(Debug)]
pub enum Opened {
    Fresh(RunDir),
    /// `--resume` found a complete run with the same hash.
    AlreadyComplete(Manifest),
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
    prefix: PathBuf,
    manifest: Rc<RefCell<Manifest>>,
}

impl RunDir {
    pub fn open(root: &Path, manifest: Manifest, config: &RunConfig, resume: bool) -> Result<Opened, CliError> {
        let path = root.join(MANIFEST_FILE);
        if resume && path.exists() {
            let text = std::fs::read_to_string(&path).map_err(io_error(&path))?;
            let old: Manifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("unreadable manifest {}: {e}", path.display())))?;
            if old.manifest != manifest.manifest {
                return Err(CliError::Config(format!(
                    "cannot resume: {} was produced by run {}, this configuration is run {}",
                    root.display(),
                    old.manifest,
                    manifest.manifest
                )));
            }
            if old.status == Status::Complete {
                return Ok(Opened::AlreadyComplete(old));
            }
        }
        std::fs::create_dir_all(root).map_err(io_error(root))?;
        let dir = Self {
            root: root.to_path_buf(),
            prefix: PathBuf::new(),
            manifest: Rc::new(RefCell::new(manifest)),
        };
        write(&root.join("config.toml"), &config.to_toml())?;
        dir.save_manifest()?;
        Ok(Opened::Fresh(dir))
    }

    /// Subdirectory sharing this run's manifest.
    pub fn subdir(&self, name: &str) -> Self {
        Self {
            root: self.root.clone(),
            prefix: self.prefix.join(name),
            manifest: Rc::clone(&self.manifest),
        }
    }

    pub fn hash(&self) -> String {
        self.manifest.borrow().manifest.clone()
    }

    fn record(&self, name: &str) -> PathBuf {
        let rel = self.prefix.join(name);
        let key = rel.to_string_lossy().replace('\\', "/");
        let mut m = self.manifest.borrow_mut();
        if !m.files.contains(&key) {
            m.files.push(key);
            m.files.sort();
        }
        self.root.join(rel)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("results serialize to JSON");
        let hash = serde_json::Value::String(self.hash());
        let v = match v {
            serde_json::Value::Object(ref mut map) => {
                map.insert("manifest".into(), hash);
                v
            }
            other => serde_json::json!({ "manifest": hash, "data": other }),
        };
        let path = self.record(name);
        let text = serde_json::to_string_pretty(&v).expect("JSON value renders") + "\n";
        write(&path, &text)
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.record(name);
        write(&path, &table.render(&self.hash()))
    }

    fn save_manifest(&self) -> Result<(), CliError> {
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&*self.manifest.borrow()).expect("manifest serializes") + "\n";
        write(&path, &text)
    }

    /// Records the final status; partial files stay in place on failure.
    pub fn finish(&self, outcome: &Result<Option<bool>, CliError>) -> Result<Manifest, CliError> {
        {
            let mut m = self.manifest.borrow_mut();
            match outcome {
                Ok(converged) => {
                    m.status = Status::Complete;
                    m.converged = *converged;
                }
                Err(e) => {
                    m.status = Status::Failed;
                    m.error = Some(e.to_string());
                }
            }
        }
        self.save_manifest()?;
        Ok(self.manifest.borrow().clone())
    }
}
