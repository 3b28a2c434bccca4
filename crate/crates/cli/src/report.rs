//! Artifact directory: CSV tables, JSON documents and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "PESIM_OUT";

/// `--out`, then `$PESIM_OUT`, then the config's `out`, then `pesim-out`.
pub fn output_dir(flag: Option<&Path>, config: Option<&Path>, base: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    match config {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => base.join(p),
        None => PathBuf::from("pesim-out"),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files into one directory and remembers their names.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::result::Result<(), pesim_core::Error>,
    {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(f);
        body(&mut w).map_err(|e| match e {
            pesim_core::Error::Io(io) => CliError::io(&path, io),
            other => CliError::from(other),
        })?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write_with(name, |w| Ok(w.write_all(bytes)?))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            Ok(writeln!(w)?)
        })
    }

    /// CSV with a fixed header; no rows gives a header-only file.
    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        self.write_with(name, |w| Ok(write_table(w, header, rows)?))
    }
}

/// One CSV cell. Floats are written in shortest round-trip form.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v:?}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

pub fn write_table<W: Write>(mut w: W, header: &[&str], rows: &[Vec<Cell>]) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub pesim_cli: &'static str,
    pub pesim_core: &'static str,
    pub schema: u32,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            pesim_cli: env!("CARGO_PKG_VERSION"),
            pesim_core: pesim_core::VERSION,
            schema: crate::config::SCHEMA_VERSION,
        }
    }
}

/// `manifest.json`, written last in every run that got as far as its
/// output directory.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub mode: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub status: String,
    pub artifacts: Vec<String>,
    /// Mode-specific details (trajectory header, optimizer outcome, ...).
    pub details: serde_json::Value,
}

pub const TABLE_CONVERGE: &[&str] = &["n", "re_norm_diff", "action_gap"];
pub const TABLE_MC: &[&str] = &["epsilon", "p_hat", "stderr", "neg_eps_log_p", "I_star"];
pub const TABLE_SCAN: &[&str] = &["control", "re_norm"];
pub const TABLE_MODES: &[&str] = &["column", "field", "i", "j", "m"];
pub const TABLE_VERIFY: &[&str] = &["check", "value", "threshold", "pass"];
