//! CSV files with `#`-prefixed header lines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{CliError, Result};

pub const UNITS: &str = "time ps; length angstrom; mass amu; energy kcal/mol; angular velocity rad per internal time unit (48.8882 fs)";

/// A CSV table assembled in memory and written in one go.
#[derive(Debug, Clone)]
pub struct Csv {
    header: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

/// Shortest round-trip representation; missing values are empty cells.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Csv {
    pub fn new(schema: &str, columns: Vec<&'static str>) -> Self {
        Csv {
            header: vec![
                ("schema".into(), schema.into()),
                ("version".into(), format!("mdcli {}", modemd::VERSION)),
            ],
            columns,
            rows: vec![],
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.header.push((key.into(), value.into()));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.render())
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `<dir>/<stem>_<scheme>_eps<eps>.csv`
pub fn run_file(dir: &Path, stem: &str, scheme: &str, eps: f64, suffix: &str) -> PathBuf {
    dir.join(format!("{stem}_{scheme}_eps{eps:.0e}{suffix}.csv"))
}
