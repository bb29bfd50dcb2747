//! Output files and their run manifests.
//!
//! Every file written by a command gets a sidecar `<file>.manifest.json`
//! with the command line, seed, version, timestamps and SHA-256 hashes of
//! the inputs and outputs. The data files themselves carry no timestamps,
//! so identical runs produce byte-identical outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use transference_core::{Error, Result};

#[derive(Serialize)]
struct FileHash {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    arguments: &'a [String],
    seed: u64,
    version: &'static str,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    inputs: Vec<FileHash>,
    output: FileHash,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn hash_file(path: &Path) -> Result<FileHash> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(FileHash {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Per-run bookkeeping shared by all commands.
pub struct Run {
    command: String,
    arguments: Vec<String>,
    seed: u64,
    started: u128,
    inputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            arguments: std::env::args().skip(1).collect(),
            seed,
            started: now_ms(),
            inputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn write_manifest(&self, output: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: &self.command,
            arguments: &self.arguments,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            inputs: self.inputs.iter().map(|p| hash_file(p)).collect::<Result<_>>()?,
            output: hash_file(output)?,
        };
        let path = manifest_path(output);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))
    }

    /// Writes pretty JSON to `path` plus its manifest.
    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("output serializes");
        fs::write(path, text + "\n").map_err(|e| io_error(path, e))?;
        self.write_manifest(path)
    }

    /// Writes one compact JSON object per line to `path` plus its manifest.
    pub fn write_jsonl<T: Serialize>(&self, path: &Path, items: &[T]) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        for item in items {
            let line = serde_json::to_string(item).expect("record serializes");
            writeln!(file, "{line}").map_err(|e| io_error(path, e))?;
        }
        drop(file);
        self.write_manifest(path)
    }
}

/// Pretty JSON on stdout.
pub fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
