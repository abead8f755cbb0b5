use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use super::CliError;

/// A CSV table; every row is prefixed with the config hash when written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key: value` lines after the standard header.
    pub notes: Vec<(String, String)>,
}

impl Table {
    #[must_use]
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    #[must_use]
    pub fn to_csv(&self, command: &str, hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: semispec {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {command}");
        let _ = writeln!(out, "# config_hash: {hash}");
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "config_hash,{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{hash},{}", row.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","));
        }
        out
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Shortest round-trip formatting; empty for missing values.
#[must_use]
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[must_use]
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// The JSON sibling of a CSV report.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: &'a str,
    pub config: &'a C,
    pub check: Option<bool>,
    pub results: &'a R,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
