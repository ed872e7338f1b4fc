//! CSV and JSON files tagged with the configuration hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct Csv {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Csv {
    /// Creates `dir/name` (and `dir`), writing the hash line and the column header.
    pub fn create(dir: &Path, name: &str, hash: &str, units: &str, header: &[&str]) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# config_hash={hash}")?;
        writeln!(out, "# units: {units}")?;
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { path, out })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush()?;
        Ok(self.path)
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Shortest round-trip representation, so equal numbers print identically.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
