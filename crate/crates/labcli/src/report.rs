//! CSV tables and atomic file output.

use mflab::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// A header plus string records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Data(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }
}

/// Formats a float for CSV output.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Collected outputs of one subcommand.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
}

impl Report {
    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        self.files.push((name.to_string(), table.to_csv()?));
        Ok(())
    }

    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Writes every file plus `summary.txt`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for (name, contents) in &self.files {
            out.push(write_atomic(dir, name, contents)?);
        }
        let mut text = self.summary.join("\n");
        text.push('\n');
        out.push(write_atomic(dir, "summary.txt", &text)?);
        Ok(out)
    }
}
