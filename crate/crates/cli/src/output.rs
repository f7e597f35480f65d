//! Artifact directory, CSV tables and the experiment manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const CACHE_ENV: &str = "BETALAB_CACHE_DIR";
const DEFAULT_OUT: &str = "betalab-out";

/// A rendered CSV file waiting to be written.
pub struct Table {
    pub name: String,
    bytes: Vec<u8>,
}

pub fn table<T: Serialize>(name: &str, rows: &[T]) -> Result<Table, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Table { name: format!("{name}.csv"), bytes })
}

/// Everything a command produces besides its exit status.
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub seeds: Vec<u64>,
    pub precision: Value,
    /// Set when a checked invariant failed; the command still writes its artifacts.
    pub violation: Option<String>,
}

impl Outcome {
    pub fn new(result: Value) -> Self {
        Self { result, tables: Vec::new(), seeds: Vec::new(), precision: Value::Null, violation: None }
    }

    pub fn with_table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }

    pub fn with_seeds(mut self, seeds: &[u64]) -> Self {
        self.seeds.extend_from_slice(seeds);
        self
    }

    pub fn with_precision(mut self, p: Value) -> Self {
        self.precision = p;
        self
    }

    pub fn violated_if(mut self, failed: bool, what: &str) -> Self {
        if failed {
            self.violation = Some(what.to_string());
        }
        self
    }
}

pub fn resolve_out(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub argv: Vec<String>,
    pub parameters: Value,
    pub workers: usize,
    pub proxy: Option<&'a str>,
}

/// Write `result.json`, the tables and `manifest.json` under `out/<command>/`.
/// Paths in the manifest are relative to `out`, and nothing time-dependent is
/// recorded, so a single-threaded rerun reproduces every byte.
pub fn write_artifacts(out: &Path, info: &RunInfo<'_>, outcome: &Outcome) -> Result<Vec<u8>, CliError> {
    let dir = out.join(info.command);
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let result = pretty(&outcome.result)?;
    let mut outputs = vec![format!("{}/result.json", info.command)];
    write(&dir.join("result.json"), &result)?;
    for t in &outcome.tables {
        write(&dir.join(&t.name), &t.bytes)?;
        outputs.push(format!("{}/{}", info.command, t.name));
    }
    let manifest = json!({
        "command": info.command,
        "argv": info.argv,
        "parameters": info.parameters,
        "seeds": outcome.seeds,
        "versions": { "betalab": env!("CARGO_PKG_VERSION") },
        "workers": info.workers,
        "precision": outcome.precision,
        "proxy": info.proxy,
        "outputs": outputs,
        "violation": outcome.violation,
    });
    write(&dir.join("manifest.json"), &pretty(&manifest)?)?;
    Ok(result)
}
